"""
Sampled checkers for the declared potential constants.

Each checker draws points (or pairs) uniformly in a ball, evaluates the
inequality it is named after and reports the worst violation together with
the witnessing point(s).
"""
import logging
from typing import Callable, Optional

import numpy as np

from app.errors import ConfigurationError
from app.potentials.models import PotentialModel, as_points
from app.potentials.schemas import CheckReport

logger = logging.getLogger(__name__)

TOLERANCE = 1e-8


def sample_ball(rng: np.random.Generator, n: int, radius: float, d: int,
                inner_radius: float = 0.0) -> np.ndarray:
    """Uniform points in the shell inner_radius <= ||x|| <= radius."""
    direction = rng.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    u = rng.uniform(size=n)
    r = (inner_radius**d + u * (radius**d - inner_radius**d)) ** (1.0 / d)
    return direction * r[:, None]


def cube_grid(half_width: float, n_per_axis: int, d: int) -> np.ndarray:
    """Tensor grid over [-half_width, half_width]^d as an (n^d, d) array."""
    axis = np.linspace(-half_width, half_width, n_per_axis)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _report(name: str, violations: np.ndarray, witnesses: np.ndarray, statistic: float,
            tolerance: float = TOLERANCE, bound: Optional[float] = None, notes: str = "") -> CheckReport:
    worst = int(np.argmax(violations))
    max_violation = float(violations[worst])
    report = CheckReport(
        name=name,
        statistic=statistic,
        bound=bound,
        max_violation=max_violation,
        passed=bool(max_violation <= tolerance),
        tolerance=tolerance,
        n_evaluated=int(violations.size),
        witness=[float(v) for v in np.ravel(witnesses[worst])],
        notes=notes,
    )
    if not report.passed:
        logger.info("%s failed: violation %.3e at %s", name, max_violation, report.witness)
    return report


def _holder_sum(model: PotentialModel, dist: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """sum_i c_i dist^(alpha_i + shift), c_i = L_i / (1 + alpha_i) when shift == 1."""
    total = np.zeros_like(dist)
    for L_i, a_i in model.smoothness.components:
        coeff = L_i / (1.0 + a_i) if shift else L_i
        total += coeff * dist ** (a_i + shift)
    return total


def check_mixture_smooth(model: PotentialModel, n_pairs: int, radius: float,
                         rng: np.random.Generator) -> CheckReport:
    """Worst ||grad U(x) - grad U(y)|| - sum_i L_i ||x - y||^alpha_i over random pairs."""
    x = sample_ball(rng, n_pairs, radius, model.d)
    y = sample_ball(rng, n_pairs, radius, model.d)
    lhs = np.linalg.norm(model.gradient(x) - model.gradient(y), axis=1)
    violations = lhs - _holder_sum(model, np.linalg.norm(x - y, axis=1))
    return _report("mixture_smooth", violations, np.hstack([x, y]), float(violations.max()))


def check_descent_bound(model: PotentialModel, n_pairs: int, radius: float,
                        rng: np.random.Generator) -> CheckReport:
    """U(y) <= U(x) + <grad U(x), y - x> + sum_i L_i/(1+alpha_i) ||y - x||^(1+alpha_i)."""
    x = sample_ball(rng, n_pairs, radius, model.d)
    y = sample_ball(rng, n_pairs, radius, model.d)
    h = y - x
    linear = model.value(x) + np.sum(model.gradient(x) * h, axis=1)
    violations = model.value(y) - linear - _holder_sum(model, np.linalg.norm(h, axis=1), shift=1.0)
    return _report("descent_bound", violations, np.hstack([x, y]), float(violations.max()))


def _require_dissipativity(model: PotentialModel):
    if model.dissipativity is None:
        raise ConfigurationError(f"Potential '{model.name}' declares no dissipativity constants")
    return model.dissipativity


def check_dissipativity(model: PotentialModel, n_points: int, radius: float,
                        rng: np.random.Generator) -> CheckReport:
    """min over sampled x of <grad U(x), x> - a ||x||^beta + b; passes iff >= -1e-8."""
    diss = _require_dissipativity(model)
    x = sample_ball(rng, n_points, radius, model.d)
    x[0] = 0.0
    slack = (np.sum(model.gradient(x) * x, axis=1)
             - diss.a * np.linalg.norm(x, axis=1) ** diss.beta + diss.b)
    return _report("dissipativity", -slack, x, float(slack.min()))


def dissipative_lower_bound(model: PotentialModel) -> Callable[[np.ndarray], np.ndarray]:
    """
    Lower bound implied by dissipativity and the descent inequality.

    U(x) >= (a/(2 beta)) ||x||^beta + U(0) - sum_i L_i/(alpha_i+1) R^(alpha_i+1) - b
    with R = (2b/a)^(1/beta).

    Args:
        model: Potential with dissipativity declared and stationary at zero

    Returns:
        Vectorized function of x
    """
    diss = _require_dissipativity(model)
    if not model.stationary_at_zero:
        raise ConfigurationError(f"Potential '{model.name}' is not declared stationary at zero")
    R = (2.0 * diss.b / diss.a) ** (1.0 / diss.beta)
    offset = model.value_at_zero() - diss.b - sum(
        L_i / (a_i + 1.0) * R ** (a_i + 1.0) for L_i, a_i in model.smoothness.components
    )

    def bound(x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return diss.a / (2.0 * diss.beta) * r**diss.beta + offset

    return bound


def check_lower_bound(model: PotentialModel, grid: np.ndarray) -> CheckReport:
    """value(x) >= dissipative_lower_bound(x) on every grid point."""
    pts = as_points(grid, model.d)
    gap = dissipative_lower_bound(model)(pts) - model.value(pts)
    return _report("lower_bound", gap, pts, float(gap.max()))


def check_gradient_fd(model: PotentialModel, n_points: int, radius: float, rng: np.random.Generator,
                      h: float = 1e-5, rtol: float = 1e-4, min_radius: float = 1e-2) -> CheckReport:
    """Central differences against gradient(); points closer than min_radius to the origin are avoided."""
    x = sample_ball(rng, n_points, radius, model.d, inner_radius=min_radius)
    fd = np.empty_like(x)
    for j in range(model.d):
        e = np.zeros(model.d)
        e[j] = h
        fd[:, j] = (model.value(x + e) - model.value(x - e)) / (2.0 * h)
    grad = model.gradient(x)
    rel = np.linalg.norm(fd - grad, axis=1) / np.maximum(1.0, np.linalg.norm(grad, axis=1))
    return _report("gradient_fd", rel, x, float(rel.max()), tolerance=rtol)


def check_stationary(model: PotentialModel) -> CheckReport:
    """||grad U(0)|| <= 1e-10."""
    norm = float(np.linalg.norm(model.gradient(np.zeros(model.d))))
    return CheckReport(name="stationary_at_zero", statistic=norm, bound=1e-10,
                       max_violation=norm - 1e-10, passed=norm <= 1e-10, tolerance=0.0,
                       n_evaluated=1, witness=[0.0] * model.d)


def hessian_floor(mu: float, theta: float, x: np.ndarray) -> np.ndarray:
    """(1 - theta)(mu/2)(1 + ||x||^2)^(-theta/2), the Hessian floor of the convexifying bump."""
    r2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
    return (1.0 - theta) * 0.5 * mu * (1.0 + r2) ** (-0.5 * theta)


def second_difference(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                      direction: np.ndarray) -> np.ndarray:
    """Directional second difference with step 1e-4 max(1, ||x||)."""
    h = 1e-4 * np.maximum(1.0, np.linalg.norm(x, axis=-1))[:, None]
    step = h * direction
    return (fn(x + step) - 2.0 * fn(x) + fn(x - step)) / (h[:, 0] ** 2)


def check_convexity_outside_ball(model: PotentialModel, n_points: int, outer_radius: float,
                                 rng: np.random.Generator, tolerance: float = 1e-6) -> CheckReport:
    """
    Directional curvature of U outside the convexity ball against mu (1 + r^2)^(-theta/2).

    The floor is the degenerate-convexity profile itself; merely convex tails
    declare mu = 0.
    """
    if model.convexity_radius is None:
        raise ConfigurationError(f"Potential '{model.name}' declares no convexity radius")
    conv = model.degenerate_convexity
    mu, theta = (conv.mu, conv.theta) if conv is not None else (0.0, 0.0)
    R = model.convexity_radius
    x = sample_ball(rng, n_points, outer_radius, model.d, inner_radius=R * 1.001)
    u = rng.standard_normal(x.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    curvature = second_difference(model.value, x, u)
    floor = mu * (1.0 + np.sum(x * x, axis=1)) ** (-0.5 * theta)
    return _report("convexity_outside_ball", floor - curvature, x, float((curvature - floor).min()),
                   tolerance=tolerance)
