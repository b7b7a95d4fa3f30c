"""swlab: weighted Riesz potentials, thermic Besov norms, and Stein-Weiss
extremals for radial profiles on logarithmic grids."""

from .radial import (
    RadialGrid,
    RadialFunction,
    BoundaryWarning,
    DroppedMassWarning,
    make_grid,
    integrate,
    weighted_lp_norm,
    dilate,
    radial_gradient,
    hl_maximal,
    MaximalOperator,
    save_profile,
    load_profile,
)
from .heat import (
    KernelMatrix,
    BesovResult,
    EndpointWarning,
    heat_profile,
    heat_kernel_matrix,
    heat_apply,
    besov_norm,
    heat_decay_report,
    tail_decay_report,
    log_t_grid,
)
from .riesz import (
    TailWarning,
    TimeRangeError,
    riesz_constant,
    riesz_kernel_matrix,
    riesz_apply,
    riesz_apply_heat,
    RieszHeatOperator,
    riesz_truncated_apply,
    ball_difference_matrix,
    split_high_low,
)
from .params import (
    ParamSet,
    ValidationReport,
    ValidationError,
    MissingFieldsError,
    DegenerateDerivationError,
    validate_stein_weiss,
    validate_improved,
    validate_ckn,
    validate_ckn_improved,
    validate_compact_embedding,
    validate_maximizer,
    derive,
)

__version__ = "0.1.0"
