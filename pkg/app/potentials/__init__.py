from app.potentials.schemas import CheckReport, DegenerateConvexity, DissipativitySpec, SmoothnessSpec
from app.potentials.models import PotentialModel
from app.potentials.zoo import builtin, builtin_names
from app.potentials.checks import (
    check_convexity_outside_ball,
    check_descent_bound,
    check_dissipativity,
    check_gradient_fd,
    check_lower_bound,
    check_mixture_smooth,
    check_stationary,
    dissipative_lower_bound,
)

__all__ = [
    'CheckReport',
    'DegenerateConvexity',
    'DissipativitySpec',
    'SmoothnessSpec',
    'PotentialModel',
    'builtin',
    'builtin_names',
    'check_convexity_outside_ball',
    'check_descent_bound',
    'check_dissipativity',
    'check_gradient_fd',
    'check_lower_bound',
    'check_mixture_smooth',
    'check_stationary',
    'dissipative_lower_bound',
]
