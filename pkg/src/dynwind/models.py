"""Two-band Bloch Hamiltonians H(k) = hx*sx + hy*sy + hz*sz on the torus.

Each component is a finite Fourier series sum_m c_m exp(i m.k) with integer
frequency vectors, so evaluation, differentiation and serialization are exact.
Momenta live on [-pi, pi)^d but are accepted unreduced; everything here is
2*pi-periodic by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ModelFormatError

__all__ = [
    "FourierSeries",
    "Model",
    "reduce_momentum",
    "builtin",
    "chiral1d",
    "nonchiral1d",
    "qah2d",
    "largechern2d",
    "parse_model",
    "serialize_model",
    "BUILTIN_FAMILIES",
]


def reduce_momentum(k):
    """Map momentum components into the fundamental zone [-pi, pi)."""
    k = np.asarray(k, dtype=float)
    return np.mod(k + np.pi, 2.0 * np.pi) - np.pi


def _as_mode(mode, dimension):
    if np.isscalar(mode):
        mode = (mode,)
    out = []
    for m in mode:
        fm = float(m)
        if not fm.is_integer():
            raise ModelFormatError(f"frequency vector must be integer, got {mode!r}")
        out.append(int(fm))
    if len(out) != dimension:
        raise ModelFormatError(
            f"frequency vector {tuple(out)!r} has arity {len(out)}, expected {dimension}"
        )
    return tuple(out)


@dataclass(frozen=True)
class FourierSeries:
    """A finite trigonometric polynomial h(k) = sum_m c_m exp(i m.k).

    Terms are canonicalized on construction: repeated frequencies merge and
    exact-zero coefficients drop, so equal functions built from different
    cos/sin combinations compare equal term by term.
    """

    dimension: int
    terms: tuple = ()

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ModelFormatError(f"dimension must be 1 or 2, got {self.dimension!r}")
        merged = {}
        for mode, coeff in self.terms:
            mode = _as_mode(mode, self.dimension)
            merged[mode] = merged.get(mode, 0j) + complex(coeff)
        canon = tuple((m, c) for m, c in sorted(merged.items()) if c != 0)
        object.__setattr__(self, "terms", canon)

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, dimension):
        return cls(dimension, ())

    @classmethod
    def constant(cls, value, dimension=1):
        return cls(dimension, (((0,) * dimension, value),))

    @classmethod
    def cosine(cls, amplitude, mode):
        """amplitude * cos(m.k) in the exponential basis."""
        mode = tuple(np.atleast_1d(mode).astype(int))
        neg = tuple(-m for m in mode)
        half = 0.5 * complex(amplitude)
        return cls(len(mode), ((mode, half), (neg, half)))

    @classmethod
    def sine(cls, amplitude, mode):
        """amplitude * sin(m.k) in the exponential basis."""
        mode = tuple(np.atleast_1d(mode).astype(int))
        neg = tuple(-m for m in mode)
        half = -0.5j * complex(amplitude)
        return cls(len(mode), ((mode, half), (neg, -half)))

    # -- algebra --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, FourierSeries):
            if other.dimension != self.dimension:
                raise DimensionMismatchError("cannot add series of different dimension")
            return FourierSeries(self.dimension, self.terms + other.terms)
        return NotImplemented

    def __mul__(self, scalar):
        return FourierSeries(self.dimension, tuple((m, c * scalar) for m, c in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1)

    def __sub__(self, other):
        return self + (-other)

    # -- evaluation -----------------------------------------------------

    def _phases(self, k):
        k = np.asarray(k, dtype=float)
        if self.dimension == 1:
            return k, k.shape
        if k.ndim == 0 or k.shape[-1] != self.dimension:
            raise DimensionMismatchError(
                f"momentum with trailing axis {self.dimension} required, got shape {k.shape}"
            )
        return k, k.shape[:-1]

    def __call__(self, k):
        k, out_shape = self._phases(k)
        out = np.zeros(out_shape, dtype=complex)
        for mode, coeff in self.terms:
            if self.dimension == 1:
                phase = mode[0] * k
            else:
                phase = sum(m * k[..., a] for a, m in enumerate(mode))
            out = out + coeff * np.exp(1j * phase)
        return out

    def derivative(self, axis=0):
        """Exact partial derivative with respect to momentum component `axis`."""
        if not 0 <= axis < self.dimension:
            raise DimensionMismatchError(f"axis {axis} out of range for dimension {self.dimension}")
        return FourierSeries(
            self.dimension, tuple((m, 1j * m[axis] * c) for m, c in self.terms)
        )

    def is_real(self, tol=1e-12):
        """True iff the series is real-valued: c_{-m} = conj(c_m) for all m."""
        coeffs = dict(self.terms)
        scale = max((abs(c) for c in coeffs.values()), default=0.0)
        if scale == 0.0:
            return True
        for mode, coeff in coeffs.items():
            neg = tuple(-m for m in mode)
            if abs(coeffs.get(neg, 0j) - np.conj(coeff)) > tol * scale:
                return False
        return True

    def coefficient_bound(self):
        """Sup-norm bound sum_m |c_m|."""
        return float(sum(abs(c) for _, c in self.terms))


@dataclass(frozen=True)
class Model:
    """A two-band Bloch Hamiltonian given by three component series."""

    dimension: int
    hx: FourierSeries
    hy: FourierSeries
    hz: FourierSeries
    label: str = ""

    def __post_init__(self):
        for name in ("hx", "hy", "hz"):
            series = getattr(self, name)
            if series.dimension != self.dimension:
                raise ModelFormatError(
                    f"{name} has dimension {series.dimension}, model has {self.dimension}"
                )

    def evaluate(self, k):
        """Evaluate (hx, hy, hz) at momentum k; broadcasts over sample axes."""
        return self.hx(k), self.hy(k), self.hz(k)

    def hvector(self, k):
        """h(k) stacked on the last axis, shape (..., 3)."""
        return np.stack(np.broadcast_arrays(*self.evaluate(k)), axis=-1)

    def is_hermitian(self, tol=1e-12):
        return self.hx.is_real(tol) and self.hy.is_real(tol) and self.hz.is_real(tol)

    def scale(self):
        """A magnitude scale for tolerances: the largest component sup bound."""
        return max(
            self.hx.coefficient_bound(),
            self.hy.coefficient_bound(),
            self.hz.coefficient_bound(),
            1e-300,
        )

    def component(self, name):
        return {"x": self.hx, "y": self.hy, "z": self.hz}[name]


# -- builtin families ----------------------------------------------------


def chiral1d(J0, J1, J2, delta):
    """1D chain with hx = J0 + J1 cos k + J2 cos 2k, hy = J1 sin k + J2 sin 2k - i*delta."""
    hx = (
        FourierSeries.constant(J0, 1)
        + FourierSeries.cosine(J1, (1,))
        + FourierSeries.cosine(J2, (2,))
    )
    hy = (
        FourierSeries.sine(J1, (1,))
        + FourierSeries.sine(J2, (2,))
        + FourierSeries.constant(-1j * delta, 1)
    )
    return Model(
        1, hx, hy, FourierSeries.zero(1),
        label=f"chiral1d(J0={J0}, J1={J1}, J2={J2}, delta={delta})",
    )


def nonchiral1d(J0, J1, J2, delta, hz):
    """The chiral1d chain with a constant hz that breaks chiral symmetry."""
    base = chiral1d(J0, J1, J2, delta)
    return Model(
        1, base.hx, base.hy, FourierSeries.constant(hz, 1),
        label=f"nonchiral1d(J0={J0}, J1={J1}, J2={J2}, delta={delta}, hz={hz})",
    )


def qah2d(m_z, J, delta):
    """Quantum-anomalous-Hall model: (J sin kx, J sin ky, m_z - J cos kx - J cos ky - i*delta)."""
    hx = FourierSeries.sine(J, (1, 0))
    hy = FourierSeries.sine(J, (0, 1))
    hz = (
        FourierSeries.constant(m_z - 1j * delta, 2)
        + FourierSeries.cosine(-J, (1, 0))
        + FourierSeries.cosine(-J, (0, 1))
    )
    return Model(2, hx, hy, hz, label=f"qah2d(m_z={m_z}, J={J}, delta={delta})")


def largechern2d(Jx, Jy, Jz, m_z, delta):
    """Doubled-harmonic model supporting |C| up to 3: hx = Jx sin 2kx, hy = Jy sin 2ky."""
    hx = FourierSeries.sine(Jx, (2, 0))
    hy = FourierSeries.sine(Jy, (0, 2))
    hz = (
        FourierSeries.constant(m_z - 1j * delta, 2)
        + FourierSeries.cosine(-Jz, (1, 0))
        + FourierSeries.cosine(-Jz, (0, 1))
    )
    return Model(
        2, hx, hy, hz,
        label=f"largechern2d(Jx={Jx}, Jy={Jy}, Jz={Jz}, m_z={m_z}, delta={delta})",
    )


BUILTIN_FAMILIES = {
    "chiral1d": (chiral1d, ("J0", "J1", "J2", "delta")),
    "nonchiral1d": (nonchiral1d, ("J0", "J1", "J2", "delta", "hz")),
    "qah2d": (qah2d, ("m_z", "J", "delta")),
    "largechern2d": (largechern2d, ("Jx", "Jy", "Jz", "m_z", "delta")),
}


def builtin(family, params):
    """Build a named model family from a positional parameter list."""
    try:
        build, names = BUILTIN_FAMILIES[family]
    except KeyError:
        raise ModelFormatError(
            f"unknown family {family!r}; choose from {sorted(BUILTIN_FAMILIES)}"
        ) from None
    params = list(params)
    if len(params) != len(names):
        raise ModelFormatError(
            f"{family} takes {len(names)} parameters {names}, got {len(params)}"
        )
    return build(*[float(p) for p in params])


# -- serialization --------------------------------------------------------


def _series_to_doc(series):
    return [{"m": list(m), "c": [c.real, c.imag]} for m, c in series.terms]


def _series_from_doc(doc, dimension, name):
    if not isinstance(doc, list):
        raise ModelFormatError(f"{name} must be a list of terms")
    terms = []
    for entry in doc:
        if not isinstance(entry, dict) or set(entry) != {"m", "c"}:
            raise ModelFormatError(f"{name} term must be an object with keys m, c")
        mode = entry["m"]
        c = entry["c"]
        if not isinstance(mode, list):
            raise ModelFormatError(f"{name} frequency must be a list")
        if not (isinstance(c, list) and len(c) == 2):
            raise ModelFormatError(f"{name} coefficient must be a [re, im] pair")
        terms.append((_as_mode(mode, dimension), complex(float(c[0]), float(c[1]))))
    return FourierSeries(dimension, tuple(terms))


def serialize_model(model):
    """Model -> JSON-compatible document. Inverse of parse_model up to term order."""
    return {
        "dimension": model.dimension,
        "label": model.label,
        "hx": _series_to_doc(model.hx),
        "hy": _series_to_doc(model.hy),
        "hz": _series_to_doc(model.hz),
    }


def parse_model(doc):
    """Parse a model document (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    missing = {"dimension", "hx", "hy", "hz"} - set(doc)
    if missing:
        raise ModelFormatError(f"model document missing keys {sorted(missing)}")
    dimension = doc["dimension"]
    if dimension not in (1, 2):
        raise ModelFormatError(f"dimension must be 1 or 2, got {dimension!r}")
    return Model(
        dimension,
        _series_from_doc(doc["hx"], dimension, "hx"),
        _series_from_doc(doc["hy"], dimension, "hy"),
        _series_from_doc(doc["hz"], dimension, "hz"),
        label=str(doc.get("label", "")),
    )
