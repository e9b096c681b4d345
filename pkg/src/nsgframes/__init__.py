"""Painless nonstationary Gabor frames: analysis, synthesis and N-term approximation.

``nsgframes.BACKEND`` names the active kernel implementation
(``"compiled"`` or ``"python"``); switch with :func:`use_backend`.
"""

from . import _backend
from ._backend import use_backend
from .adapt import (
    OnsetParams,
    WindowSchedule,
    detect_onsets,
    ladder,
    scale_frame_schedule,
)
from .approx import (
    STANDARD_GRID,
    ErrorCurve,
    JacksonReport,
    SequenceNormParams,
    Thresholder,
    error_curve,
    jackson_ratio,
    jackson_report,
    power_fit,
    redundancy,
    rms,
    sequence_norm,
    threshold_top_n,
)
from .covering import (
    AffineMap,
    Bapu,
    ModerateWeight,
    StructuredCovering,
    amalgam_covering,
    build_bapu,
    check_admissible,
    check_weight,
    covering_from_system,
    neighbor_sets,
)
from .decomp import (
    DecompNormParams,
    EquivalenceReport,
    decomposition_norm,
    equivalence_battery,
    equivalence_report,
    local_norms,
)
from .errors import (
    CoveringError,
    DegenerateInputError,
    DimensionError,
    FitError,
    FormatError,
    FrameError,
    NearSingularWarning,
    NsgfError,
    NsgfIOError,
    PainlessError,
    ParameterError,
    SchedulingError,
    SeparationError,
    SymmetryError,
    TilingError,
    UnsupportedFormatError,
)
from .frame import (
    FrameDiagonal,
    NsgfSystem,
    PainlessReport,
    canonical_dual,
    canonical_tight,
    frame_bounds,
    frame_diagonal,
    make_nsgf,
    make_stationary_gabor,
    validate_painless,
)
from .signal_io import Signal, SyntheticSpec, generate, load_wav, melody_spec, write_wav
from .transform import (
    CoefficientLayout,
    CoefficientSet,
    analyze,
    apply_frame_operator,
    read_coefficients,
    synthesize,
    write_coefficients,
)

__version__ = "0.1.0"


def __getattr__(name):
    if name == "BACKEND":
        return _backend.BACKEND
    raise AttributeError(f"module 'nsgframes' has no attribute {name!r}")
