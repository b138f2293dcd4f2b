"""Shape-constrained quantile regression toolkit.

Convex quantile regression (CQR), simultaneous non-crossing estimation
(sCQR), and L2-penalized estimation (pCQR) on an embedded sparse
interior-point solver, plus the Monte Carlo data generator and the
quantile-calibration metrics.
"""

from cqrkit._core import (
    FitError,
    GammaSearchExhausted,
    GammaSearchResult,
    MultiQuantileModel,
    NoiseSpec,
    QuantileModel,
    __version__,
    composed_error_cdf,
    composed_error_quantile,
    coverage_error,
    detect_crossing,
    fit_cqr,
    fit_pcqr,
    fit_scqr,
    frontier_value,
    generate,
    mse,
    quantile_property_check,
    ramp_loss,
    search_gamma,
    split_sigma,
    true_quantile,
)

__all__ = [
    "FitError",
    "GammaSearchExhausted",
    "GammaSearchResult",
    "MultiQuantileModel",
    "NoiseSpec",
    "QuantileModel",
    "__version__",
    "composed_error_cdf",
    "composed_error_quantile",
    "coverage_error",
    "detect_crossing",
    "fit_cqr",
    "fit_pcqr",
    "fit_scqr",
    "frontier_value",
    "generate",
    "mse",
    "quantile_property_check",
    "ramp_loss",
    "search_gamma",
    "split_sigma",
    "true_quantile",
]
