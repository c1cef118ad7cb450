"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Momentum arity does not match the model dimension."""


class ModelFormatError(ValueError):
    """Malformed model document or inconsistent Fourier data."""


class ExceptionalPointError(ArithmeticError):
    """Eigenvalues coalesce; the biorthogonal frame does not exist."""


class SingularPlaneError(ArithmeticError):
    """The requested azimuthal plane satisfies h_i^2 + h_j^2 = 0."""


class InadmissibleStateError(ValueError):
    """Initial state violates the admissibility constraints."""


class ProfileInvalidError(RuntimeError):
    """Angle profile failed to unwrap within the refinement budget."""

    def __init__(self, message, momentum=None):
        super().__init__(message)
        self.momentum = momentum


class EPOnLoopError(ArithmeticError):
    """Quadrature integrand is singular on the sampled loop."""


class DegenerateAxisError(ValueError):
    """The singularity condition holds identically for this reference axis."""


class NewtonError(RuntimeError):
    """Root refinement failed to converge."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ClassificationError(ValueError):
    """Pole sign undecidable: Re h_i vanishes at the singularity."""


class SeparationError(RuntimeError):
    """Singularities sit too close together to enclose with separated loops."""
