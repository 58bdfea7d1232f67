from app.smoothing.pgauss import (
    PGaussParams,
    log_normalizer,
    make_params,
    norm_moment,
    norm_moment_sandwich,
    normalizer,
    sample,
)
from app.smoothing.schemas import GradEstimate, MCEstimate, SmoothingConfig, SmoothingReport
from app.smoothing.estimator import (
    draw_perturbations,
    estimate_grad,
    estimate_value,
    stochastic_grad,
)
from app.smoothing.bounds import check_grad_bounds, check_value_bound, check_variance

__all__ = [
    'PGaussParams',
    'log_normalizer',
    'make_params',
    'norm_moment',
    'norm_moment_sandwich',
    'normalizer',
    'sample',
    'GradEstimate',
    'MCEstimate',
    'SmoothingConfig',
    'SmoothingReport',
    'draw_perturbations',
    'estimate_grad',
    'estimate_value',
    'stochastic_grad',
    'check_grad_bounds',
    'check_value_bound',
    'check_variance',
]
