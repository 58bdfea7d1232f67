"""
Convex extension V of boundary values and its mollification.

Inside the ball of radius R, V is the largest convex function below the values
of U~ on the sphere: V(x) = inf sum_j lambda_j U~(x_j) over convex combinations
of boundary points with sum_j lambda_j x_j = x. In d = 1 the two endpoints
+-R fix the weights. In d = 2 the infimum is the lower convex hull of the lifted
points (x_j, U~(x_j)); every lower facet of that hull is one optimal triple, so
V is the maximum of the facet planes. Exhaustive triple search is kept as
enumerate_V for cross-checks.
"""
import itertools
import logging
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import roots_legendre

from app.errors import DomainError, ParameterError

logger = logging.getLogger(__name__)

# relative slack when deciding whether a point is inside the ball
_INSIDE_RTOL = 1e-12
_BATCH = 1024
# boundary arcs are split this many times; the lower hull error is quadratic in the arc length
OVERSAMPLE = 4


def boundary_points(R: float, d: int, M: int = 360) -> np.ndarray:
    """M equally spaced points on the circle (d = 2) or the two endpoints (d = 1)."""
    if d == 1:
        return np.array([[-R], [R]])
    if d == 2:
        angles = 2.0 * np.pi * np.arange(M) / M
        return R * np.column_stack([np.cos(angles), np.sin(angles)])
    raise DomainError(f"Convex extension is implemented for d <= 2, got d={d}")


class ConvexExtension:
    """
    V inside the ball from the values of U~ on the boundary points.

    Args:
        tilde_U: Vectorized evaluator of U~ on (n, d) arrays
        R: Ball radius
        d: Dimension (1 or 2)
        M: Number of boundary arcs in d = 2
        oversample: Points per arc; M * oversample points are lifted in total
    """

    def __init__(self, tilde_U: Callable[[np.ndarray], np.ndarray], R: float, d: int, M: int = 360,
                 oversample: int = OVERSAMPLE):
        if R <= 0.0:
            raise ParameterError(f"R must be positive, got {R}")
        if d == 2 and M < 3:
            raise ParameterError(f"Need at least 3 boundary points, got {M}")
        if oversample < 1:
            raise ParameterError(f"oversample must be >= 1, got {oversample}")
        self.R = float(R)
        self.d = d
        self.M = M if d == 2 else 2
        self.oversample = oversample if d == 2 else 1
        self.points = boundary_points(self.R, d, self.M * self.oversample)
        self.values = np.asarray(tilde_U(self.points), dtype=float).reshape(-1)
        self.planes = self._lower_planes() if d == 2 else None

    def _lower_planes(self) -> np.ndarray:
        lifted = np.column_stack([self.points, self.values])
        # joggle so that flat boundary data (constant or affine U~) still triangulates
        hull = ConvexHull(lifted, qhull_options="QJ")
        planes = []
        for simplex, normal in zip(hull.simplices, hull.equations):
            if normal[2] >= 0.0:
                continue
            xy = self.points[simplex]
            system = np.column_stack([np.ones(3), xy])
            planes.append(np.linalg.solve(system, self.values[simplex]))
        planes = np.array(planes)
        logger.debug("Lower hull of %d boundary points has %d facets", len(self.points), len(planes))
        return planes

    @property
    def boundary_min(self) -> float:
        return float(self.values.min())

    def inside(self, x: np.ndarray) -> np.ndarray:
        """V at points with ||x|| <= R; raises DomainError for points outside."""
        pts = np.asarray(x, dtype=float).reshape(-1, self.d)
        if np.any(np.linalg.norm(pts, axis=1) > self.R * (1.0 + _INSIDE_RTOL)):
            raise DomainError(f"V is defined inside the ball of radius {self.R}")
        return self.evaluate(pts)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        """V at (n, d) points assumed to lie in the ball; outside it the facet planes extrapolate."""
        if self.d == 1:
            lo, hi = self.values
            t = (pts[:, 0] + self.R) / (2.0 * self.R)
            return (1.0 - t) * lo + t * hi
        out = np.empty(pts.shape[0])
        for start in range(0, pts.shape[0], _BATCH):
            block = pts[start:start + _BATCH]
            affine = self.planes[:, 0] + block @ self.planes[:, 1:].T
            out[start:start + _BATCH] = affine.max(axis=1)
        return out


def enumerate_V(points: np.ndarray, values: np.ndarray, x: np.ndarray) -> float:
    """
    Exhaustive search over boundary triples (pairs in d = 1) with closed-form weights.

    Returns the smallest sum_j lambda_j U~(x_j) over the supports that contain x.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.shape[0]
    best = np.inf
    for idx in itertools.combinations(range(len(points)), d + 1):
        idx = list(idx)
        system = np.vstack([np.ones(d + 1), points[idx].T])
        try:
            weights = np.linalg.solve(system, np.concatenate([[1.0], x]))
        except np.linalg.LinAlgError:
            continue
        if np.all(weights >= -1e-12):
            best = min(best, float(weights @ values[idx]))
    return best


def bump(u: np.ndarray) -> np.ndarray:
    """Unnormalized exp(-1 / (1 - ||u||^2)) on the unit ball, 0 outside."""
    sq = np.sum(np.atleast_2d(u) ** 2, axis=1)
    out = np.zeros_like(sq)
    inside = sq < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - sq[inside]))
    return out


def mollifier_rule(delta: float, d: int, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Quadrature nodes y_k in [-delta, delta]^d and weights w_k for V * phi_delta.

    Each axis uses Gauss-Legendre on [-delta, 0] and [0, delta] separately
    (n_nodes in total, so the rule is symmetric and exact at the kink of |u|).
    Weights include phi_delta and are normalized to sum to 1, which fixes the
    constant C of the mollifier by the same rule.
    """
    if delta <= 0.0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if n_nodes < 2 or n_nodes % 2:
        raise ParameterError(f"n_nodes must be an even number >= 2, got {n_nodes}")
    t, w = roots_legendre(n_nodes // 2)
    axis_nodes = np.concatenate([(t - 1.0) / 2.0, (t + 1.0) / 2.0])
    axis_weights = np.concatenate([w / 2.0, w / 2.0])
    grids = np.meshgrid(*([axis_nodes] * d), indexing="ij")
    unit = np.column_stack([g.ravel() for g in grids])
    base = np.prod(np.meshgrid(*([axis_weights] * d), indexing="ij"), axis=0).ravel()
    weights = base * bump(unit)
    keep = weights > 0.0
    weights = weights[keep] / weights[keep].sum()
    return delta * unit[keep], weights


def mollify(fn: Callable[[np.ndarray], np.ndarray], nodes: np.ndarray, weights: np.ndarray,
            x: np.ndarray) -> np.ndarray:
    """sum_k w_k fn(x - y_k) for every row of x."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = pts.shape
    shifted = (pts[:, None, :] - nodes[None, :, :]).reshape(-1, d)
    return (np.asarray(fn(shifted)).reshape(n, -1) * weights).sum(axis=1)
