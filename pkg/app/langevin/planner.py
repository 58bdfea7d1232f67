"""
Step-size and iteration planners.

Each planner evaluates the step-size caps of one convergence regime, takes
their minimum as eta and the ceiling of the iteration bound as k, and records
every intermediate constant in the returned StepSizePlan. Planners are pure:
identical inputs give identical plans.
"""
import logging
import math
from typing import Callable, Optional

from app.convexify.isoperimetry import (
    IsoperimetricConstants,
    isoperimetric_constants,
    isoperimetric_constants_outside_ball,
    outside_ball_constants,
    poincare_constants,
)
from app.errors import ConfigurationError, ParameterError, RegimeError
from app.langevin.schemas import Regime, StepSizePlan
from app.potentials.models import PotentialModel
from app.potentials.schemas import DissipativitySpec, SmoothnessSpec
from app.smoothing.pgauss import coordinate_variance

logger = logging.getLogger(__name__)


def compute_D3(spec: SmoothnessSpec, d: int, p: float) -> float:
    """D3 = N (10 N^3 L^6 + 16 N L^4 + 8 N^2 L^4 d^(3/p) + 4 N L^2 d)."""
    N, L = spec.N, spec.L
    if L < 1.0:
        logger.warning("D3 assumes L = max L_i >= 1, got L=%.4g", L)
    return N * (10.0 * N**3 * L**6 + 16.0 * N * L**4 + 8.0 * N**2 * L**4 * d ** (3.0 / p) + 4.0 * N * L**2 * d)


def compute_D4(spec: SmoothnessSpec, d: int, p: float) -> float:
    """D4 = D3 + N 8 N^2 L^2 d^(2 alpha / p)."""
    N, L = spec.N, spec.L
    return compute_D3(spec, d, p) + N * 8.0 * N**2 * L**2 * d ** (2.0 * spec.alpha / p)


def kl_envelope(eta: float, spec: SmoothnessSpec, gamma: float, d: int, p: float) -> float:
    """Stationary-bias envelope 8 eta^alpha D3 / (3 gamma)."""
    return 8.0 * eta**spec.alpha * compute_D3(spec, d, p) / (3.0 * gamma)


def kl_bound(k: int, eta: float, H0: float, spec: SmoothnessSpec, gamma: float, d: int, p: float) -> float:
    """e^(-gamma eta k) H0 + 8 eta^alpha D3 / (3 gamma)."""
    return math.exp(-gamma * eta * k) * H0 + kl_envelope(eta, spec, gamma, d, p)


def ar1_stationary_variance(eta: float, mu: float = 0.0, p: float = 2.0) -> float:
    """
    Per-coordinate stationary variance of (smoothed) ULA on the standard Gaussian:
    (2 eta + eta^2 mu^2 Var xi) / (1 - (1 - eta)^2).
    """
    if not 0.0 < eta < 2.0:
        raise ParameterError(f"The Gaussian chain is stationary for 0 < eta < 2, got {eta}")
    extra = eta**2 * mu**2 * coordinate_variance(p) if mu > 0.0 else 0.0
    return (2.0 * eta + extra) / (1.0 - (1.0 - eta) ** 2)


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if value is None or not value > 0.0:
            raise ParameterError(f"{name} must be positive, got {value}")


def _iterations(bound: float) -> int:
    if not math.isfinite(bound):
        raise RegimeError(f"Iteration bound is not finite ({bound})")
    return max(1, math.ceil(bound))


def _finish(regime: Regime, caps: dict[str, float], iterations: Callable[[float], float],
            constants: dict[str, float], epsilon: float, aggressive: float,
            mu_from_eta: bool = False) -> StepSizePlan:
    eta = min(caps.values())
    if aggressive != 1.0:
        logger.warning("aggressive=%.4g scales eta off the theorem (%.6g -> %.6g)", aggressive, eta, eta * aggressive)
        eta *= aggressive
    if not eta > 0.0:
        raise RegimeError(f"Step size underflows to {eta} in regime {regime.value}; caps: {caps}")
    plan = StepSizePlan(
        eta=eta,
        k_iterations=_iterations(iterations(eta)),
        regime=regime,
        constants=constants,
        caps=caps,
        epsilon_target=epsilon,
        mu=math.sqrt(eta) if mu_from_eta else None,
        aggressive=aggressive,
        off_theorem=aggressive != 1.0,
    )
    logger.info("Plan %s: eta=%.6g, k=%d", regime.value, plan.eta, plan.k_iterations)
    return plan


def plan_lsi(spec: SmoothnessSpec, gamma: float, d: int, p: float, epsilon: float, H0: float,
             aggressive: float = 1.0) -> StepSizePlan:
    """
    ULA under a log-Sobolev inequality with constant gamma.

    eta = min{1, 1/(4 gamma), (gamma / (9 N^(3/2) L^3))^(1/alpha), (3 eps gamma / (16 D3))^(1/alpha)}
    k   = ceil(log(2 H0 / eps) / (gamma eta))

    Args:
        spec: Mixture smoothness constants
        gamma: Log-Sobolev constant
        d: Dimension
        p: Shape of the smoothing law (enters D3 through d^(3/p))
        epsilon: Target KL accuracy
        H0: Initial KL divergence (or its bound)
        aggressive: Multiplier on eta; any value other than 1 is off-theorem

    Returns:
        StepSizePlan with constants D3, gamma, H0_bound
    """
    _require_positive(gamma=gamma, epsilon=epsilon, H0=H0, aggressive=aggressive)
    N, L, alpha = spec.N, spec.L, spec.alpha
    D3 = compute_D3(spec, d, p)
    caps = {
        "unit": 1.0,
        "inverse_gamma": 1.0 / (4.0 * gamma),
        "smoothness": (gamma / (9.0 * N**1.5 * L**3)) ** (1.0 / alpha),
        "accuracy": (3.0 * epsilon * gamma / (16.0 * D3)) ** (1.0 / alpha),
    }
    return _finish(Regime.LSI, caps, lambda eta: math.log(2.0 * H0 / epsilon) / (gamma * eta),
                   {"D3": D3, "gamma": gamma, "H0_bound": H0}, epsilon, aggressive)


def plan_smoothed(spec: SmoothnessSpec, gamma1: float, d: int, p: float, epsilon: float, H0: float, E2: float,
                  aggressive: float = 1.0, gamma: Optional[float] = None) -> StepSizePlan:
    """
    Smoothed ULA with mu = sqrt(eta) under a log-Sobolev inequality for pi_mu (constant gamma1).

    eta = min{1, 1/(4 gamma1), (gamma / (13 N^(3/2) L^3))^(1/alpha),
              (eps gamma1 / (6 sqrt(D4)))^(2/alpha), (eps / (9 sqrt(N L E2) d^(1/p)))^(2/alpha)}
    k   = ceil((2 / (gamma1 eta)) log(3 sqrt(H0 gamma1) / eps))

    gamma is the constant of the unsmoothed target in the third cap and defaults to gamma1.
    """
    gamma = gamma1 if gamma is None else gamma
    _require_positive(gamma1=gamma1, gamma=gamma, epsilon=epsilon, H0=H0, E2=E2, aggressive=aggressive)
    N, L, alpha = spec.N, spec.L, spec.alpha
    D4 = compute_D4(spec, d, p)
    caps = {
        "unit": 1.0,
        "inverse_gamma": 1.0 / (4.0 * gamma1),
        "smoothness": (gamma / (13.0 * N**1.5 * L**3)) ** (1.0 / alpha),
        "accuracy": (epsilon * gamma1 / (6.0 * math.sqrt(D4))) ** (2.0 / alpha),
        "moment": (epsilon / (9.0 * math.sqrt(N * L * E2) * d ** (1.0 / p))) ** (2.0 / alpha),
    }
    constants = {"D3": compute_D3(spec, d, p), "D4": D4, "gamma": gamma, "gamma1": gamma1,
                 "H0_bound": H0, "E2": E2}
    return _finish(Regime.SMOOTHED, caps,
                   lambda eta: 2.0 / (gamma1 * eta) * math.log(3.0 * math.sqrt(H0 * gamma1) / epsilon),
                   constants, epsilon, aggressive, mu_from_eta=True)


def _plan_from_gamma3(regime: Regime, spec: SmoothnessSpec, iso: IsoperimetricConstants, d: int, p: float,
                      epsilon: float, H0: float, aggressive: float) -> StepSizePlan:
    L, alpha = spec.L, spec.alpha
    gamma3 = iso.gamma3
    D3 = compute_D3(spec, d, p)
    caps = {
        "unit": 1.0,
        "inverse_gamma": 1.0 / (4.0 * gamma3),
        "smoothness": (gamma3 / (16.0 * L ** (1.0 + alpha))) ** (1.0 / alpha),
        "accuracy": (3.0 * epsilon * gamma3 / (16.0 * D3)) ** (1.0 / alpha),
    }
    constants = {"D3": D3, "H0_bound": H0, **iso.as_dict()}
    return _finish(regime, caps, lambda eta: math.log(2.0 * H0 / epsilon) / (gamma3 * eta),
                   constants, epsilon, aggressive)


def plan_poincare(spec: SmoothnessSpec, gamma: float, d: int, p: float, epsilon: float, H0: float,
                  diss: DissipativitySpec, R: float, M2: Optional[float] = None,
                  model: Optional[PotentialModel] = None, aggressive: float = 1.0) -> StepSizePlan:
    """
    ULA for a 2-dissipative target satisfying a Poincare inequality with constant gamma.

    The log-Sobolev constant gamma3 comes from the convexification chain
    (see app.convexify.isoperimetry); eta and k then follow the LSI recipe
    with gamma3 and the cap (gamma3 / (16 L^(1+alpha)))^(1/alpha).

    Args:
        M2: Second moment of exp(-U-breve); computed from model by quadrature when None (d <= 2)
        model: Potential used for M2 quadrature

    Raises:
        RegimeError: alpha_N != 1, beta != 2, or non-positive A, B, gamma3
        ConfigurationError: M2 missing and no model (or d > 2)
    """
    _require_positive(gamma=gamma, epsilon=epsilon, H0=H0, R=R, aggressive=aggressive)
    if M2 is None:
        if model is None:
            raise ConfigurationError("plan_poincare needs M2 or a model to compute it")
        iso = isoperimetric_constants(model.with_smoothness(spec), R, gamma, diss, d)
    else:
        iso = poincare_constants(spec, diss, R, gamma, d, M2)
    return _plan_from_gamma3(Regime.POINCARE_DISSIPATIVE, spec, iso, d, p, epsilon, H0, aggressive)


def plan_nonconvex_outside_ball(spec: SmoothnessSpec, d: int, p: float, epsilon: float, H0: float,
                                diss: DissipativitySpec, R: float, M2: Optional[float] = None,
                                model: Optional[PotentialModel] = None, K: float = 1.0,
                                aggressive: float = 1.0) -> StepSizePlan:
    """ULA for a target convex (not strongly) outside the ball of radius R; all constants are K-relative."""
    _require_positive(epsilon=epsilon, H0=H0, R=R, K=K, aggressive=aggressive)
    if M2 is None:
        if model is None:
            raise ConfigurationError("plan_nonconvex_outside_ball needs M2 or a model to compute it")
        iso = isoperimetric_constants_outside_ball(model.with_smoothness(spec), R, diss, d, K=K)
    else:
        iso = outside_ball_constants(spec, diss, R, d, M2, K)
    return _plan_from_gamma3(Regime.NONCONVEX_OUTSIDE_BALL, spec, iso, d, p, epsilon, H0, aggressive)
