"""
Built-in potentials covering the mixture weakly smooth class.

Declared constants and their derivations (r = ||x||):

gaussian
    U = r^2/2, grad U = x. Gradient 1-Lipschitz: {(1, 1)}.
    <grad U, x> = r^2, so (a, b, beta) = (1, 0, 2). log Z = (d/2) log(2 pi).

holder(alpha, L)
    U = L r^(1+alpha)/(1+alpha), grad U = L r^(alpha-1) x (zero at the origin).
    For f(x) = r^(alpha-1) x, ||f(x) - f(y)|| <= 2^(1-alpha) ||x - y||^alpha, with
    equality at y = -x, so the declared constant is L 2^(1-alpha); the bare L
    fails on antipodal pairs. <grad U, x> = L r^(1+alpha): (a, b, beta) = (L, 0, 1+alpha).

mixture_holder([(L_i, alpha_i)])
    Sum of holder terms; each contributes (L_i 2^(1-alpha_i), alpha_i).
    Dissipativity from the top term alone: (L_N, 0, 1+alpha_N).

cosine_perturbed_quadratic(amplitude A), 0 < A < 1
    U = r^2/2 + A sum_j cos(x_j), grad U = x - A sin(x).
    Hessian = I - A diag(cos x) lies in [(1-A) I, (1+A) I]: {(1+A, 1)},
    convex everywhere with mu = 1-A, theta = 0.
    A |t| <= t^2/2 + A^2/2 gives <grad U, x> >= r^2/2 - d A^2/2:
    (a, b, beta) = (1/2, d A^2/2, 2).

quartic_tail_capped(c), c >= 1
    U = f(r) with f(r) = r^4/4 - r^2/2 for r <= c and the C^2 quadratic
    continuation f(c) + f'(c)(r-c) + f''(c)(r-c)^2/2 beyond.
    Radial curvature f'' lies in [-1, 3c^2-1], tangential curvature f'(r)/r in
    [-1, 3c^2-1], so {(max(1, 3c^2-1), 1)}.
    Inside: r f'(r) - (r^2 - 1) = (r^2-1)^2 >= 0; outside the difference is
    increasing and convex in r for c >= 1: (a, b, beta) = (1, 1, 2).
    Convex, not strongly, outside R = 1 (tangential curvature r^2 - 1 vanishes at 1).
"""
import logging
import math
from dataclasses import replace
from typing import Any, Callable, Dict

import numpy as np

from app.errors import ConfigurationError, ParameterError
from app.potentials.models import PotentialModel
from app.potentials.schemas import DegenerateConvexity, DissipativitySpec, SmoothnessSpec

logger = logging.getLogger(__name__)


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


def _radial_power_gradient(x: np.ndarray, alpha: float) -> np.ndarray:
    """r^(alpha-1) x with the zero subgradient at the origin."""
    r = _norm(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0.0, r ** (alpha - 1.0), 0.0)
    return np.expand_dims(scale, -1) * x


def gaussian(d: int) -> PotentialModel:
    return PotentialModel(
        name="gaussian",
        d=d,
        value=lambda x: 0.5 * np.sum(np.asarray(x, dtype=float) ** 2, axis=-1),
        gradient=lambda x: np.array(x, dtype=float),
        smoothness=SmoothnessSpec(components=[(1.0, 1.0)]),
        dissipativity=DissipativitySpec(a=1.0, b=0.0, beta=2.0),
        convexity_radius=1.0,
        degenerate_convexity=DegenerateConvexity(mu=1.0, theta=0.0),
        stationary_at_zero=True,
        log_normalizer=0.5 * d * math.log(2.0 * math.pi),
    )


def mixture_holder(components: list, d: int) -> PotentialModel:
    terms = sorted(((float(L_i), float(a_i)) for L_i, a_i in components), key=lambda t: t[1])
    declared = [(L_i * 2.0 ** (1.0 - a_i), a_i) for L_i, a_i in terms]
    try:
        smoothness = SmoothnessSpec(components=declared)
    except ValueError as e:
        raise ParameterError(f"Invalid Holder mixture {components}: {e}") from e

    def value(x):
        r = _norm(np.asarray(x, dtype=float))
        return sum(L_i * r ** (1.0 + a_i) / (1.0 + a_i) for L_i, a_i in terms)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return sum(L_i * _radial_power_gradient(x, a_i) for L_i, a_i in terms)

    L_top, a_top = terms[-1]
    return PotentialModel(
        name="mixture_holder" if len(terms) > 1 else "holder",
        d=d,
        value=value,
        gradient=gradient,
        smoothness=smoothness,
        dissipativity=DissipativitySpec(a=L_top, b=0.0, beta=1.0 + a_top),
        stationary_at_zero=True,
        params={"components": [list(t) for t in terms]},
    )


def holder(alpha: float, L: float, d: int) -> PotentialModel:
    return replace(mixture_holder([(L, alpha)], d), params={"alpha": alpha, "L": L})


def cosine_perturbed_quadratic(amplitude: float, d: int, radius: float = 3.0) -> PotentialModel:
    A = float(amplitude)
    if not 0.0 < A < 1.0:
        raise ParameterError(f"amplitude must lie in (0, 1), got {A}")
    return PotentialModel(
        name="cosine_perturbed_quadratic",
        d=d,
        value=lambda x: 0.5 * np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
        + A * np.sum(np.cos(x), axis=-1),
        gradient=lambda x: np.asarray(x, dtype=float) - A * np.sin(x),
        smoothness=SmoothnessSpec(components=[(1.0 + A, 1.0)]),
        dissipativity=DissipativitySpec(a=0.5, b=0.5 * d * A * A, beta=2.0),
        convexity_radius=radius,
        degenerate_convexity=DegenerateConvexity(mu=1.0 - A, theta=0.0),
        stationary_at_zero=True,
        params={"amplitude": A},
    )


def quartic_tail_capped(d: int, c: float = 1.5) -> PotentialModel:
    c = float(c)
    if c < 1.0:
        raise ParameterError(f"cap c must be >= 1, got {c}")
    f_c = c**4 / 4.0 - c**2 / 2.0
    df_c = c**3 - c
    d2f_c = 3.0 * c**2 - 1.0

    def value(x):
        r = _norm(np.asarray(x, dtype=float))
        inner = r**4 / 4.0 - r**2 / 2.0
        outer = f_c + df_c * (r - c) + 0.5 * d2f_c * (r - c) ** 2
        return np.where(r <= c, inner, outer)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = _norm(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = (df_c + d2f_c * (r - c)) / r
        scale = np.where(r <= c, r**2 - 1.0, outer)
        return np.expand_dims(scale, -1) * x

    return PotentialModel(
        name="quartic_tail_capped",
        d=d,
        value=value,
        gradient=gradient,
        smoothness=SmoothnessSpec(components=[(max(1.0, d2f_c), 1.0)]),
        dissipativity=DissipativitySpec(a=1.0, b=1.0, beta=2.0),
        convexity_radius=1.0,
        degenerate_convexity=DegenerateConvexity(mu=0.0, theta=0.0),
        stationary_at_zero=True,
        params={"c": c},
    )


_BUILDERS: Dict[str, Callable[..., PotentialModel]] = {
    "gaussian": lambda d, **kw: gaussian(d),
    "holder": lambda d, alpha=0.5, L=1.0: holder(alpha, L, d),
    "mixture_holder": lambda d, components=((1.0, 0.5), (1.0, 1.0)): mixture_holder(list(components), d),
    "cosine_perturbed_quadratic": lambda d, amplitude=0.5, radius=3.0: cosine_perturbed_quadratic(amplitude, d, radius),
    "quartic_tail_capped": lambda d, c=1.5: quartic_tail_capped(d, c),
}


def builtin_names() -> list[str]:
    return sorted(_BUILDERS)


def builtin(name: str, d: int, **params: Any) -> PotentialModel:
    """
    Build a named potential.

    Args:
        name: One of builtin_names()
        d: Dimension
        **params: Potential-specific parameters (alpha, L, components, amplitude, c, radius)

    Returns:
        PotentialModel with its declared constants

    Raises:
        ConfigurationError: unknown name or unexpected parameter
    """
    if name not in _BUILDERS:
        raise ConfigurationError(f"Unknown potential '{name}'. Available: {', '.join(builtin_names())}")
    if d < 1:
        raise ParameterError(f"Dimension must be >= 1, got {d}")
    try:
        model = _BUILDERS[name](int(d), **params)
    except TypeError as e:
        raise ConfigurationError(f"Bad parameters for potential '{name}': {params} ({e})") from e
    logger.debug("Built potential %s (d=%d, params=%s)", name, d, params)
    return model
