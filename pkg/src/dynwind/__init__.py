"""Topological invariants of two-band Bloch Hamiltonians from spin-texture dynamics.

The library evaluates 1D winding numbers and 2D Chern numbers of Hermitian and
non-Hermitian two-band models in one framework: long-time-averaged spin
textures define azimuthal-angle fields whose loop windings give the invariants
directly, with conventional quadrature and lattice-curvature routes kept as
independent cross-checks.
"""

__version__ = "0.1.0"

from .errors import (
    ClassificationError,
    DegenerateAxisError,
    DimensionMismatchError,
    EPOnLoopError,
    ExceptionalPointError,
    InadmissibleStateError,
    ModelFormatError,
    NewtonError,
    ProfileInvalidError,
    SeparationError,
    SingularPlaneError,
)
from .models import (
    BUILTIN_FAMILIES,
    FourierSeries,
    Model,
    builtin,
    chiral1d,
    largechern2d,
    nonchiral1d,
    parse_model,
    qah2d,
    reduce_momentum,
    serialize_model,
)
from .spectral import (
    EigenSystem,
    RealAzimuth,
    band_energy,
    bloch_angles,
    eigensystem,
    equilibrium_azimuth,
    plane_for_axis,
    real_azimuth_decomposition,
    stationary_texture_angles,
)
from .dynamics import (
    AverageReport,
    InitialState,
    TextureSeries,
    averaged_azimuth,
    evolve,
    texture_at,
    texture_series,
    time_average,
)
from .winding import (
    AngleProfile,
    WindingResult,
    angle_profile,
    conventional_winding,
    dwn,
    dwn_combined,
    w_total,
)
from .chern import (
    ChernResult,
    SingularityPoint,
    axis_sweep_check,
    band_gap_closures,
    chern_dwn,
    chern_lattice_oracle,
    find_sps,
    loop_dwn,
)
from .sweep import (
    CellResult,
    SweepGrid,
    SweepPlan,
    boundary_audit,
    convergence_study,
    named_boundaries,
    run_sweep,
)
