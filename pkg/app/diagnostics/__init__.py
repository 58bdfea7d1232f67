from app.diagnostics.schemas import BiasFit, Check, DiagnosticsReport, Estimate
from app.diagnostics.estimators import (
    entropy_knn,
    inverse_cdf,
    kl_estimate,
    kl_gaussian,
    kl_knn,
    kl_knn_two_sample,
    kl_quadrature,
    log_partition,
    tv_estimate,
    w2_estimate,
)
from app.diagnostics.checks import (
    bias_scaling_fit,
    diagnose,
    grad_moment_bound,
    grad_moment_check,
    moment_from_kl_check,
    moment_kl_terms,
    pinsker_check,
    smoothing_w2_bound,
    smoothing_w2_check,
    talagrand_check,
)

__all__ = [
    'BiasFit',
    'Check',
    'DiagnosticsReport',
    'Estimate',
    'entropy_knn',
    'inverse_cdf',
    'kl_estimate',
    'kl_gaussian',
    'kl_knn',
    'kl_knn_two_sample',
    'kl_quadrature',
    'log_partition',
    'tv_estimate',
    'w2_estimate',
    'bias_scaling_fit',
    'diagnose',
    'grad_moment_bound',
    'grad_moment_check',
    'moment_from_kl_check',
    'moment_kl_terms',
    'pinsker_check',
    'smoothing_w2_bound',
    'smoothing_w2_check',
    'talagrand_check',
]
