from app.convexify.extension import ConvexExtension, enumerate_V, mollifier_rule
from app.convexify.construction import (
    ConvexifiedPotential,
    build_breve_U,
    build_hat_U,
    check_hat_convexity,
    check_shell_continuity,
    convex_extension_V,
    grid_table,
    mollified_V,
    verify_boundary_resolution,
    verify_breve,
    verify_oscillation,
)
from app.convexify.isoperimetry import (
    IsoperimetricConstants,
    isoperimetric_constants,
    isoperimetric_constants_outside_ball,
    lyapunov_check,
    outside_ball_constants,
    poincare_constants,
    poincare_from_bobkov,
    second_moment,
)

__all__ = [
    'ConvexExtension',
    'enumerate_V',
    'mollifier_rule',
    'ConvexifiedPotential',
    'build_breve_U',
    'build_hat_U',
    'check_hat_convexity',
    'check_shell_continuity',
    'convex_extension_V',
    'grid_table',
    'mollified_V',
    'verify_boundary_resolution',
    'verify_breve',
    'verify_oscillation',
    'IsoperimetricConstants',
    'isoperimetric_constants',
    'isoperimetric_constants_outside_ball',
    'lyapunov_check',
    'outside_ball_constants',
    'poincare_constants',
    'poincare_from_bobkov',
    'second_moment',
]
