"""Executable verdicts for the regularity hierarchy of intrinsic graphs."""

from .broad import (
    ReachResult,
    broad_check,
    broad_star_check,
    curve_quotients,
    omega_matrix,
    propagation_check,
    vertical_holder_modulus,
    vertical_reach,
)
from .differentiability import (
    GradientError,
    estimate_intrinsic_gradient,
    horizontal_derivatives,
    intrinsic_difference_quotient,
    uid_pairs,
    uid_quotients,
    uid_residual,
)
from .holder import little_holder_modulus, pointwise_quotient
from .lipschitz import cone_ratio, curve_holder_bounds, intrinsic_lipschitz_check, lipschitz_curve_factor
from .reports import (
    DEFAULT_THRESHOLDS,
    HolderReport,
    IntrinsicGradientEstimate,
    Thresholds,
    VerificationReport,
    classify,
    log_slope,
)

__all__ = [name for name in dir() if not name.startswith("_")]
