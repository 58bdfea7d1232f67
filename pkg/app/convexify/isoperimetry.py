"""
Isoperimetric constants for non-convex potentials, second moments by
quadrature and the Lyapunov check of the dissipative regime.

Every constant is a literal evaluation of its closed form. With
    osc = 2 sum_i L_i R^(1+alpha_i) + 4 L_N R^2 + 4 L R^(1+alpha)
    S   = 2 (b + (L + lambda0/2) R^2 + a R^2 + d) / a + M2
    S'  = 2 ((b + 4 (L + lambda0/4) R^2 + a R^2) + d) / a + M2
the dissipative regime uses
    gamma1 = gamma e^(-4 osc),   zeta = sqrt(2 S / gamma1)
    A = (1 - L/2) 8 / a^2 + zeta,   B = 2 S' (1 - L/2 + 1/zeta)
    gamma2 = 2 / (A + (B + 2) / gamma1),   gamma3 = e^(-osc) gamma2
and the outside-ball regime replaces gamma by 1/(32 K^2 d c), c = (a + b + 2aR^2 + 3)/a,
and 4 osc by 4 (4 L_N R^2 + 4 L R^(1+alpha)) in gamma1. K is a universal constant
left unspecified by the theory; every number in that regime is K-relative.
"""
import logging
import math
from typing import Callable, Optional, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.integrate import trapezoid

from app.convexify.construction import (
    ConvexifiedPotential,
    breve_oscillation_bound,
    build_breve_U,
    lambda0,
)
from app.errors import ConfigurationError, DomainError, RegimeError
from app.potentials.models import PotentialModel
from app.potentials.schemas import CheckReport, DissipativitySpec, SmoothnessSpec

logger = logging.getLogger(__name__)


class IsoperimetricConstants(BaseModel):
    """Constants of the Poincare-to-LSI chain; all positive with gamma3 <= gamma."""

    model_config = {"frozen": True}

    regime: str = Field(description="POINCARE_DISSIPATIVE or NONCONVEX_OUTSIDE_BALL")
    gamma: float = Field(description="Base Poincare constant", gt=0.0)
    gamma1: float = Field(description="gamma after the bounded-perturbation factor", gt=0.0)
    gamma2: float = Field(description="Log-Sobolev constant of the convexified potential", gt=0.0)
    gamma3: float = Field(description="Log-Sobolev constant of the original potential", gt=0.0)
    A: float = Field(gt=0.0)
    B: float = Field(gt=0.0)
    zeta: float = Field(gt=0.0)
    M2: float = Field(description="Second moment of exp(-U-breve)", ge=0.0)
    osc: float = Field(description="Oscillation bound used in the exponential factors", ge=0.0)
    lambda0: float = Field(gt=0.0)
    K: Optional[float] = Field(default=None, description="Universal constant (outside-ball regime only)")

    def as_dict(self) -> dict[str, float]:
        values = self.model_dump(exclude={"regime"})
        return {k: float(v) for k, v in values.items() if v is not None}


def _require_quadratic(spec: SmoothnessSpec, diss: DissipativitySpec) -> None:
    if spec.alpha_N != 1.0:
        raise RegimeError(f"This regime needs alpha_N = 1, got {spec.alpha_N}")
    if diss.beta != 2.0:
        raise RegimeError(f"This regime needs 2-dissipativity, got beta={diss.beta}")


def _A_B_zeta(spec: SmoothnessSpec, diss: DissipativitySpec, R: float, d: int, M2: float,
              lam: float, gamma1: float) -> tuple[float, float, float]:
    a, b, L = diss.a, diss.b, spec.L
    S = 2.0 * (b + (L + lam / 2.0) * R**2 + a * R**2 + d) / a + M2
    S_prime = 2.0 * ((b + 4.0 * (L + lam / 4.0) * R**2 + a * R**2) + d) / a + M2
    zeta = math.sqrt(2.0 * S / gamma1)
    A = (1.0 - L / 2.0) * 8.0 / a**2 + zeta
    B = 2.0 * S_prime * (1.0 - L / 2.0 + 1.0 / zeta)
    if A <= 0.0 or B <= 0.0:
        raise RegimeError(f"Non-positive constants A={A:.6g}, B={B:.6g} (L={L} too large for this regime)")
    return A, B, zeta


def poincare_constants(spec: SmoothnessSpec, diss: DissipativitySpec, R: float, gamma: float, d: int,
                       M2: float) -> IsoperimetricConstants:
    """
    Constants of the dissipative regime from a Poincare constant gamma.

    Raises:
        RegimeError: alpha_N != 1, beta != 2, or a non-positive A, B or gamma3
    """
    _require_quadratic(spec, diss)
    osc = breve_oscillation_bound(spec, R)
    lam = lambda0(spec, R)
    gamma1 = gamma * math.exp(-4.0 * osc)
    A, B, zeta = _A_B_zeta(spec, diss, R, d, M2, lam, gamma1)
    gamma2 = 2.0 / (A + (B + 2.0) / gamma1)
    gamma3 = 2.0 * gamma * math.exp(-osc) / (A * gamma + (B + 2.0) * math.exp(4.0 * osc))
    if not gamma3 > 0.0:
        raise RegimeError(f"gamma3 underflows to {gamma3} (osc={osc:.6g})")
    return IsoperimetricConstants(regime="POINCARE_DISSIPATIVE", gamma=gamma, gamma1=gamma1, gamma2=gamma2,
                                  gamma3=gamma3, A=A, B=B, zeta=zeta, M2=M2, osc=osc, lambda0=lam)


def _outside_ratio(diss: DissipativitySpec, R: float) -> float:
    return (diss.a + diss.b + 2.0 * diss.a * R**2 + 3.0) / diss.a


def poincare_from_bobkov(diss: DissipativitySpec, R: float, spec: SmoothnessSpec, d: int,
                         K: float = 1.0) -> float:
    """Poincare lower bound e^(-8 sum_i L_i R^(1+alpha_i)) / (32 K^2 d c) for potentials convex outside the ball."""
    exponent = 8.0 * sum(L_i * R ** (1.0 + a_i) for L_i, a_i in spec.components)
    return math.exp(-exponent) / (32.0 * K**2 * d * _outside_ratio(diss, R))


def outside_ball_constants(spec: SmoothnessSpec, diss: DissipativitySpec, R: float, d: int, M2: float,
                           K: float = 1.0) -> IsoperimetricConstants:
    """Constants of the regime convex, not strongly convex, outside the ball (K-relative)."""
    _require_quadratic(spec, diss)
    osc = breve_oscillation_bound(spec, R)
    lam = lambda0(spec, R)
    tail = 4.0 * spec.L_N * R**2 + 4.0 * spec.L * R ** (1.0 + spec.alpha)
    gamma = 1.0 / (32.0 * K**2 * d * _outside_ratio(diss, R))
    gamma1 = gamma * math.exp(-4.0 * tail)
    A, B, zeta = _A_B_zeta(spec, diss, R, d, M2, lam, gamma1)
    gamma2 = 2.0 / (A + (B + 2.0) / gamma1)
    gamma3 = 2.0 * math.exp(-osc) / (A + (B + 2.0) * 32.0 * K**2 * d * _outside_ratio(diss, R)
                                     * math.exp(4.0 * tail))
    if not gamma3 > 0.0:
        raise RegimeError(f"gamma3 underflows to {gamma3} (osc={osc:.6g})")
    return IsoperimetricConstants(regime="NONCONVEX_OUTSIDE_BALL", gamma=gamma, gamma1=gamma1, gamma2=gamma2,
                                  gamma3=gamma3, A=A, B=B, zeta=zeta, M2=M2, osc=osc, lambda0=lam, K=K)


def second_moment(potential_fn: Callable[[np.ndarray], np.ndarray], d: int, extent: float,
                  n_nodes: Optional[int] = None) -> float:
    """
    E||x||^2 under exp(-f) / Z by trapezoid quadrature on [-extent, extent]^d.

    Args:
        potential_fn: f evaluated on (n, d) arrays
        d: Dimension (1 or 2)
        extent: Half width of the integration box
        n_nodes: Nodes per axis (4001 in d = 1, 601 in d = 2)

    Returns:
        Normalized second moment
    """
    if d > 2:
        raise DomainError(f"Quadrature second moments are available for d <= 2, got d={d}")
    n = (4001 if d == 1 else 601) if n_nodes is None else n_nodes
    axis = np.linspace(-extent, extent, n)
    if d == 1:
        f = np.asarray(potential_fn(axis[:, None]), dtype=float)
        w = np.exp(-(f - f.min()))
        return float(trapezoid(axis**2 * w, axis) / trapezoid(w, axis))
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    f = np.asarray(potential_fn(np.column_stack([xx.ravel(), yy.ravel()])), dtype=float).reshape(n, n)
    w = np.exp(-(f - f.min()))
    num = trapezoid(trapezoid((xx**2 + yy**2) * w, axis, axis=1), axis)
    den = trapezoid(trapezoid(w, axis, axis=1), axis)
    return float(num / den)


def breve_second_moment(cp: ConvexifiedPotential, n_nodes: Optional[int] = None) -> float:
    """M2 of exp(-U-breve); the box reaches 10 / sqrt(a) beyond the modified region."""
    a = cp.base.dissipativity.a if cp.base.dissipativity is not None else 1.0
    extent = cp.R + 2.0 * cp.eps + cp.delta + 10.0 / math.sqrt(a)
    return second_moment(cp.breve_U, cp.d, extent, n_nodes)


def _resolve(base: PotentialModel, R: Optional[float], diss: Optional[DissipativitySpec], d: Optional[int],
             M2: Optional[float]) -> tuple[float, DissipativitySpec, int, float]:
    R = base.convexity_radius if R is None else R
    diss = base.dissipativity if diss is None else diss
    d = base.d if d is None else d
    if R is None or diss is None:
        raise ConfigurationError(f"Potential '{base.name}' needs a convexity radius and dissipativity")
    if M2 is None:
        if d > 2:
            raise ConfigurationError(f"M2 must be supplied for d={d} > 2")
        M2 = breve_second_moment(build_breve_U(base, R))
        logger.info("M2 by quadrature of exp(-U-breve): %.8g", M2)
    return R, diss, d, M2


def isoperimetric_constants(base: PotentialModel, R: Optional[float], gamma: float,
                            diss: Optional[DissipativitySpec] = None, d: Optional[int] = None,
                            M2: Optional[float] = None) -> IsoperimetricConstants:
    """Dissipative-regime constants; M2 defaults to quadrature of exp(-U-breve) (d <= 2)."""
    R, diss, d, M2 = _resolve(base, R, diss, d, M2)
    return poincare_constants(base.smoothness, diss, R, gamma, d, M2)


def isoperimetric_constants_outside_ball(base: PotentialModel, R: Optional[float] = None,
                                         diss: Optional[DissipativitySpec] = None, d: Optional[int] = None,
                                         M2: Optional[float] = None, K: float = 1.0) -> IsoperimetricConstants:
    R, diss, d, M2 = _resolve(base, R, diss, d, M2)
    return outside_ball_constants(base.smoothness, diss, R, d, M2, K)


def lyapunov_check(target: Union[PotentialModel, ConvexifiedPotential], diss: DissipativitySpec,
                   grid: np.ndarray, tolerance: float = 1e-8) -> CheckReport:
    """
    LW/W for W = exp(a ||x||^2 / 4) against -(a^2/4)||x||^2 + (a/2)(b' + d) on a grid.

    LW/W = (a/2) d + (a^2/4)||x||^2 - (a/2) <grad U(x), x>. For a potential
    b' = b; for U-breve b' = b + (L_N + lambda0/2) R'^2 + a R'^2 with
    R' = R + 2 eps + delta, and the gradient is taken by central differences.
    """
    if diss.beta != 2.0:
        raise RegimeError(f"The Lyapunov check needs 2-dissipativity, got beta={diss.beta}")
    pts = np.asarray(grid, dtype=float)
    a = diss.a
    if isinstance(target, ConvexifiedPotential):
        spec = target.base.smoothness
        R_out = target.R + 2.0 * target.eps + target.delta
        lam = target.lambda0 if target.lambda0 is not None else lambda0(spec, target.R)
        offset = diss.b + (spec.L_N + lam / 2.0) * R_out**2 + a * R_out**2
        grad = target.target_gradient(pts)
        name = "lyapunov_breve"
    else:
        offset = diss.b
        grad = target.gradient(pts)
        name = "lyapunov"
    d = pts.shape[1]
    r2 = np.sum(pts * pts, axis=1)
    generator = 0.5 * a * d + 0.25 * a**2 * r2 - 0.5 * a * np.sum(grad * pts, axis=1)
    bound = -0.25 * a**2 * r2 + 0.5 * a * (offset + d)
    violation = generator - bound
    worst = int(np.argmax(violation))
    return CheckReport(name=name, statistic=float((bound - generator).min()), bound=float(offset),
                       max_violation=float(violation[worst]), passed=bool(violation[worst] <= tolerance),
                       tolerance=tolerance, n_evaluated=int(pts.shape[0]),
                       witness=[float(v) for v in pts[worst]], notes=f"b'={offset:.6g}")
