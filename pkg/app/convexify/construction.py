"""
Convexified potentials for targets that are convex only outside a ball.

Hat construction (base U, Hessian floor mu (1 + r^2)^(-theta/2) outside R):
    g(x)  = mu / (2 (2 - theta)) (1 + ||x||^2)^(1 - theta/2)
    U~    = U - g
    V     = convex extension of U~ restricted to the sphere ||x|| = R
    V~    = V * phi_delta
    U^    = V~ + g                     ||x|| <= R + eps
          = w U~ + (1 - w) V~ + g      R + eps < ||x|| < R + 2 eps
          = U                          ||x|| >= R + 2 eps
    w(r)  = 1/2 - 1/2 cos(pi (r^2 - (R + eps)^2) / (eps (2R + 3 eps)))

Breve construction (alpha_N = 1, lambda0 = 2L / R^(1 - alpha)):
    U-bar = U + ((L_N + lambda0)/2) ||x||^2, convexified with g = (lambda0/4) ||x||^2,
    then U-breve = U-bar^ - ((L_N + lambda0)/2) ||x||^2, which equals U outside R + 2 eps.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from app.convexify.extension import ConvexExtension, mollifier_rule, mollify
from app.errors import ConfigurationError, ParameterError, RegimeError
from app.potentials.checks import cube_grid, hessian_floor, second_difference
from app.potentials.models import PotentialModel
from app.potentials.schemas import CheckReport, SmoothnessSpec

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

OSC_TOLERANCE = 1e-6
FD_TOLERANCE = 1e-6
RESOLUTION_TOLERANCE = 1e-4


def _sq_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)


def degenerate_bump(mu: float, theta: float) -> ArrayFn:
    """g(x) = mu / (2 (2 - theta)) (1 + ||x||^2)^(1 - theta/2)."""
    coeff = mu / (2.0 * (2.0 - theta))
    return lambda x: coeff * (1.0 + _sq_norm(x)) ** (1.0 - 0.5 * theta)


def blend_weight(r: np.ndarray, R: float, eps: float) -> np.ndarray:
    """Weight on U~ across the shell: 0 at R + eps, 1 at R + 2 eps."""
    phase = (np.asarray(r, dtype=float) ** 2 - (R + eps) ** 2) / (eps * (2.0 * R + 3.0 * eps))
    return 0.5 - 0.5 * np.cos(np.pi * np.clip(phase, 0.0, 1.0))


def lambda0(spec: SmoothnessSpec, R: float) -> float:
    return 2.0 * spec.L / R ** (1.0 - spec.alpha)


def hat_oscillation_bound(spec: SmoothnessSpec, R: float, mu: float, theta: float) -> float:
    """sum_i L_i R^(1+alpha_i) + (4 mu / (2 - theta)) R^(2 - theta)."""
    return (sum(L_i * R ** (1.0 + a_i) for L_i, a_i in spec.components)
            + 4.0 * mu / (2.0 - theta) * R ** (2.0 - theta))


def breve_oscillation_bound(spec: SmoothnessSpec, R: float) -> float:
    """2 sum_i L_i R^(1+alpha_i) + 4 L_N R^2 + 4 L R^(1+alpha)."""
    return (2.0 * sum(L_i * R ** (1.0 + a_i) for L_i, a_i in spec.components)
            + 4.0 * spec.L_N * R**2 + 4.0 * spec.L * R ** (1.0 + spec.alpha))


@dataclass(frozen=True, eq=False)
class ConvexifiedPotential:
    """
    Evaluators of one convexification. Immutable after construction.

    source is the function that was convexified (U for the hat construction,
    U-bar for the breve one); shift is the quadratic coefficient removed at the
    end (0 for the hat construction).
    """

    base: PotentialModel
    R: float
    eps: float
    delta: float
    theta: float
    mu_strong: float
    M: int
    source: ArrayFn
    g: ArrayFn
    extension: ConvexExtension
    nodes: np.ndarray
    weights: np.ndarray
    osc_bound: float
    kind: str = "hat"
    lambda0: Optional[float] = None
    shift: float = 0.0

    @property
    def d(self) -> int:
        return self.base.d

    def points(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(-1, self.d)

    def tilde_U(self, x: np.ndarray) -> np.ndarray:
        pts = self.points(x)
        return self.source(pts) - self.g(pts)

    def V(self, x: np.ndarray) -> np.ndarray:
        """Convex extension inside the ball, U~ outside."""
        pts = self.points(x)
        r = np.linalg.norm(pts, axis=1)
        out = np.empty(pts.shape[0])
        inner = r <= self.R
        if inner.any():
            out[inner] = self.extension.evaluate(pts[inner])
        if (~inner).any():
            out[~inner] = self.tilde_U(pts[~inner])
        return out

    def V_tilde(self, x: np.ndarray) -> np.ndarray:
        return mollify(self.V, self.nodes, self.weights, self.points(x))

    def hat_U(self, x: np.ndarray) -> np.ndarray:
        pts = self.points(x)
        r = np.linalg.norm(pts, axis=1)
        out = np.asarray(self.source(pts), dtype=float).copy()
        near = r < self.R + 2.0 * self.eps
        if near.any():
            sub = pts[near]
            w = blend_weight(r[near], self.R, self.eps)
            out[near] = w * self.tilde_U(sub) + (1.0 - w) * self.V_tilde(sub) + self.g(sub)
        return out

    def breve_U(self, x: np.ndarray) -> np.ndarray:
        if self.kind != "breve":
            raise ConfigurationError("breve_U needs a construction built with build_breve_U")
        pts = self.points(x)
        return self.hat_U(pts) - self.shift * _sq_norm(pts)

    def target(self, x: np.ndarray) -> np.ndarray:
        """The end product of the construction: U^ or U-breve."""
        return self.breve_U(x) if self.kind == "breve" else self.hat_U(x)

    def target_gradient(self, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
        """Central-difference gradient of target()."""
        pts = self.points(x)
        grad = np.empty_like(pts)
        for j in range(self.d):
            e = np.zeros(self.d)
            e[j] = h
            grad[:, j] = (self.target(pts + e) - self.target(pts - e)) / (2.0 * h)
        return grad


def convex_extension_V(cp: ConvexifiedPotential, x: np.ndarray) -> np.ndarray:
    return cp.V(x)


def mollified_V(cp: ConvexifiedPotential, x: np.ndarray) -> np.ndarray:
    return cp.V_tilde(x)


def _defaults(R: float, eps: Optional[float], delta: Optional[float]) -> tuple[float, float]:
    eps = 0.05 * R if eps is None else float(eps)
    delta = eps / 20.0 if delta is None else float(delta)
    if eps <= 0.0 or delta <= 0.0:
        raise ParameterError(f"eps and delta must be positive, got eps={eps}, delta={delta}")
    if delta > eps / 10.0:
        raise ParameterError(f"delta={delta} must not exceed eps/10={eps / 10.0}")
    return eps, delta


def _construct(base: PotentialModel, source: ArrayFn, g: ArrayFn, R: float, eps: float, delta: float,
               theta: float, mu_strong: float, M: int, n_nodes: Optional[int], osc_bound: float,
               **extra) -> ConvexifiedPotential:
    d = base.d
    if d > 2:
        raise ConfigurationError(f"Convexification is implemented for d <= 2, got d={d}")
    n_nodes = (64 if d == 1 else 8) if n_nodes is None else n_nodes
    extension = ConvexExtension(lambda x: source(x) - g(x), R, d, M)
    nodes, weights = mollifier_rule(delta, d, n_nodes)
    logger.info("Convexified '%s' (d=%d, R=%.4g, eps=%.4g, delta=%.4g, M=%d, %d mollifier nodes)",
                base.name, d, R, eps, delta, extension.M, len(weights))
    return ConvexifiedPotential(base=base, R=float(R), eps=eps, delta=delta, theta=theta, mu_strong=mu_strong,
                                M=extension.M, source=source, g=g, extension=extension, nodes=nodes,
                                weights=weights, osc_bound=osc_bound, **extra)


def build_hat_U(base: PotentialModel, R: Optional[float] = None, eps: Optional[float] = None,
                delta: Optional[float] = None, theta: Optional[float] = None, mu_strong: Optional[float] = None,
                M: int = 360, n_nodes: Optional[int] = None) -> ConvexifiedPotential:
    """
    Build U^ for a potential convex outside the ball of radius R.

    Args:
        base: Potential; R, theta and mu_strong default to its declarations
        R: Ball radius
        eps: Blend shell width (default 0.05 R)
        delta: Mollifier radius (default eps/20, at most eps/10)
        theta: Degeneracy exponent
        mu_strong: Strong convexity level (0 for merely convex tails)
        M: Boundary points in d = 2
        n_nodes: Mollifier quadrature nodes per axis (64 in d = 1, 8 in d = 2)

    Returns:
        ConvexifiedPotential of kind "hat"
    """
    R = base.convexity_radius if R is None else R
    if R is None or R <= 0.0:
        raise ConfigurationError(f"Potential '{base.name}' needs a positive convexity radius")
    conv = base.degenerate_convexity
    theta = (conv.theta if conv is not None else 0.0) if theta is None else float(theta)
    mu_strong = (conv.mu if conv is not None else 0.0) if mu_strong is None else float(mu_strong)
    eps, delta = _defaults(R, eps, delta)
    return _construct(base, base.value, degenerate_bump(mu_strong, theta), R, eps, delta, theta, mu_strong,
                      M, n_nodes, hat_oscillation_bound(base.smoothness, R, mu_strong, theta))


def build_breve_U(base: PotentialModel, R: Optional[float] = None, eps: Optional[float] = None,
                  delta: Optional[float] = None, M: int = 360,
                  n_nodes: Optional[int] = None) -> ConvexifiedPotential:
    """
    Build U-breve: convexify U + ((L_N + lambda0)/2)||x||^2 and subtract the quadratic again.

    Raises:
        RegimeError: alpha_N != 1
    """
    spec = base.smoothness
    if spec.alpha_N != 1.0:
        raise RegimeError(f"The breve construction needs alpha_N = 1, got {spec.alpha_N}")
    R = base.convexity_radius if R is None else R
    if R is None or R <= 0.0:
        raise ConfigurationError(f"Potential '{base.name}' needs a positive convexity radius")
    eps, delta = _defaults(R, eps, delta)
    lam = lambda0(spec, R)
    shift = 0.5 * (spec.L_N + lam)

    def source(x):
        return base.value(x) + shift * _sq_norm(x)

    def g(x):
        return 0.25 * lam * _sq_norm(x)

    return _construct(base, source, g, R, eps, delta, 0.0, lam, M, n_nodes,
                      breve_oscillation_bound(spec, R), kind="breve", lambda0=lam, shift=shift)


def check_grid(cp: ConvexifiedPotential, n_per_axis: Optional[int] = None, reach: float = 3.0) -> np.ndarray:
    """Tensor grid over the ball of radius R + reach * eps."""
    n = (2001 if cp.d == 1 else 201) if n_per_axis is None else n_per_axis
    radius = cp.R + reach * cp.eps
    grid = cube_grid(radius, n, cp.d)
    return grid[np.linalg.norm(grid, axis=1) <= radius]


def _check(name: str, statistic: float, bound: Optional[float], violation: np.ndarray, grid: np.ndarray,
           tolerance: float, notes: str = "") -> CheckReport:
    worst = int(np.argmax(violation))
    return CheckReport(name=name, statistic=float(statistic), bound=bound,
                       max_violation=float(violation[worst]),
                       passed=bool(violation[worst] <= tolerance), tolerance=tolerance,
                       n_evaluated=int(violation.size), witness=[float(v) for v in grid[worst]], notes=notes)


def verify_oscillation(cp: ConvexifiedPotential, grid: Optional[np.ndarray] = None) -> CheckReport:
    """sup(target - U) - inf(target - U) on the grid against the recorded bound."""
    grid = check_grid(cp) if grid is None else grid
    diff = cp.target(grid) - cp.base.value(grid)
    osc = float(diff.max() - diff.min())
    name = "breve_oscillation" if cp.kind == "breve" else "hat_oscillation"
    report = CheckReport(name=name, statistic=osc, bound=cp.osc_bound, max_violation=osc - cp.osc_bound,
                         passed=bool(osc <= cp.osc_bound + OSC_TOLERANCE), tolerance=OSC_TOLERANCE,
                         n_evaluated=int(grid.shape[0]),
                         witness=[float(v) for v in grid[int(np.argmax(diff))]])
    logger.info("%s: osc=%.6g bound=%.6g %s", name, osc, cp.osc_bound, "pass" if report.passed else "FAIL")
    return report


def verify_boundary_resolution(cp: ConvexifiedPotential, grid: Optional[np.ndarray] = None,
                               tolerance: float = RESOLUTION_TOLERANCE) -> CheckReport:
    """max |V_M - V_2M| over the grid points inside the ball (d = 2; trivially 0 in d = 1)."""
    grid = check_grid(cp) if grid is None else cp.points(grid)
    inner = grid[np.linalg.norm(grid, axis=1) <= cp.R]
    if cp.d == 1 or inner.shape[0] == 0:
        gap = np.zeros(max(inner.shape[0], 1))
        inner = inner if inner.shape[0] else np.zeros((1, cp.d))
    else:
        finer = ConvexExtension(cp.tilde_U, cp.R, cp.d, 2 * cp.M, cp.extension.oversample)
        gap = np.abs(cp.extension.evaluate(inner) - finer.evaluate(inner))
    report = _check("boundary_resolution", float(gap.max()), tolerance, gap, inner, tolerance,
                    notes=f"M={cp.M} vs {2 * cp.M}, {cp.extension.oversample} points per arc")
    logger.info("boundary_resolution: max |V_M - V_2M| = %.3g", report.statistic)
    return report


def verify_breve(cp: ConvexifiedPotential, grid: Optional[np.ndarray] = None,
                 outer_points: int = 200) -> list[CheckReport]:
    """
    Oscillation, exact agreement with U outside R + 2 eps + delta and
    dissipativity of U-breve.

    The dissipativity offset is b + (L_N + lambda0/2) R'^2 + a R'^2 with
    R' = R + 2 eps + delta, the radius beyond which U-breve equals U.
    """
    if cp.kind != "breve":
        raise ConfigurationError("verify_breve needs a construction built with build_breve_U")
    diss = cp.base.dissipativity
    if diss is None:
        raise ConfigurationError(f"Potential '{cp.base.name}' declares no dissipativity")
    grid = check_grid(cp) if grid is None else grid
    reports = [verify_oscillation(cp, grid)]

    R_out = cp.R + 2.0 * cp.eps + cp.delta
    radii = np.linspace(R_out * 1.0001, 3.0 * R_out, outer_points)
    if cp.d == 1:
        outside = np.concatenate([radii, -radii])[:, None]
    else:
        angles = np.linspace(0.0, 2.0 * np.pi, outer_points, endpoint=False)
        outside = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    gap = np.abs(cp.breve_U(outside) - cp.base.value(outside))
    reports.append(_check("breve_equals_U_outside", float(gap.max()), 0.0, gap, outside, 1e-9))

    spec = cp.base.smoothness
    offset = diss.b + (spec.L_N + cp.lambda0 / 2.0) * R_out**2 + diss.a * R_out**2
    wide = np.vstack([grid, outside])
    radial = np.sum(cp.target_gradient(wide) * wide, axis=1)
    violation = diss.a * _sq_norm(wide) - offset - radial
    reports.append(_check("breve_dissipativity", float(-violation.max()), offset, violation, wide, 1e-6,
                          notes=f"offset uses R'={R_out:.6g}"))
    return reports


def check_shell_continuity(cp: ConvexifiedPotential, n_directions: int = 100, gap: float = 1e-9) -> CheckReport:
    """|U^((R + eps)^-) - U^((R + eps)^+)| along shell directions."""
    if cp.d == 1:
        u = np.array([[-1.0], [1.0]])
    else:
        angles = 2.0 * np.pi * np.arange(n_directions) / n_directions
        u = np.column_stack([np.cos(angles), np.sin(angles)])
    r = cp.R + cp.eps
    jump = np.abs(cp.hat_U(u * (r - gap)) - cp.hat_U(u * (r + gap)))
    return _check("shell_continuity", float(jump.max()), 0.0, jump, u * r, OSC_TOLERANCE)


def _directions(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0]])
    s = 1.0 / math.sqrt(2.0)
    return np.array([[1.0, 0.0], [0.0, 1.0], [s, s], [s, -s]])


def check_hat_convexity(cp: ConvexifiedPotential, grid: np.ndarray) -> list[CheckReport]:
    """
    Second differences of U^ - g (>= 0) and of U^ (>= the degenerate-convexity
    floor) along the axes and diagonals.
    """
    pts = cp.points(grid)

    def blended(x):
        return cp.hat_U(x) - cp.g(x)

    floor = hessian_floor(cp.mu_strong, cp.theta, pts)
    curv_blend = np.min([second_difference(blended, pts, np.broadcast_to(u, pts.shape))
                         for u in _directions(cp.d)], axis=0)
    curv_hat = np.min([second_difference(cp.hat_U, pts, np.broadcast_to(u, pts.shape))
                       for u in _directions(cp.d)], axis=0)
    return [
        _check("hat_minus_g_convex", float(curv_blend.min()), 0.0, -curv_blend, pts, FD_TOLERANCE),
        _check("hat_hessian_floor", float((curv_hat - floor).min()), None, floor - curv_hat, pts, FD_TOLERANCE),
    ]


def grid_table(hat: ConvexifiedPotential, grid: np.ndarray,
               breve: Optional[ConvexifiedPotential] = None) -> list[dict[str, float]]:
    """Rows x0.., U, V, V_tilde, hat_U, breve_U (NaN when no breve construction) for the grid CSV."""
    pts = hat.points(grid)
    U = hat.base.value(pts)
    V = hat.V(pts)
    V_tilde = hat.V_tilde(pts)
    hat_U = hat.hat_U(pts)
    breve_U = breve.breve_U(pts) if breve is not None else np.full(pts.shape[0], np.nan)
    rows = []
    for i, x in enumerate(pts):
        row = {f"x{j}": float(v) for j, v in enumerate(x)}
        row.update(U=float(U[i]), V=float(V[i]), V_tilde=float(V_tilde[i]), hat_U=float(hat_U[i]),
                   breve_U=float(breve_U[i]))
        rows.append(row)
    return rows
