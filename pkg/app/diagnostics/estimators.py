"""
Divergence and distance estimators between a sample batch and a target pi ~ exp(-U).

KL (quadrature):  binned Gaussian KDE of the samples on a grid (histogram plus
                  scipy.ndimage.gaussian_filter, bandwidth n^(-1/(d+4)) sigma per axis)
                  against exp(-U) / Z on the same bins; d <= 2. The plug-in value is
                  bias-corrected with a multinomial bootstrap over the bins, which also
                  gives the standard error and makes the estimate independent of row order.
KL (knn):         Kozachenko-Leonenko entropy with k = 5 plus E[U] + log Z, or the
                  two-sample kNN estimator against reference draws when log Z is unknown.
TV:               Freedman-Diaconis histogram (<= 256 bins per axis) against the exact
                  bin masses of pi plus the mass of pi outside the histogram range.
W2:               sorted (quantile) coupling in d = 1, exact assignment on subsamples
                  of at most 512 rows in d >= 2.
"""
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import gaussian_filter
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import digamma, gammaln, logsumexp

from app.diagnostics.schemas import Estimate
from app.errors import ConfigurationError, DomainError, InsufficientSamplesError, ParameterError
from app.potentials.models import PotentialModel
from app.rng import make_rng

logger = logging.getLogger(__name__)

MIN_KL_SAMPLES = 100
MIN_W2_SAMPLES = 64
N_BOOTSTRAP = 200
KNN_K = 5
MAX_TV_BINS = 256
W2_SUBSAMPLE = 512
W2_DRAWS = 8
# streams reserved for estimator bootstraps when no generator is passed
_BOOTSTRAP_STREAM = 1 << 20


def _default_rng(rng: Optional[np.random.Generator], offset: int = 0) -> np.random.Generator:
    return make_rng(0, _BOOTSTRAP_STREAM + offset) if rng is None else rng


def _as_samples(samples: np.ndarray, minimum: int) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < minimum:
        raise InsufficientSamplesError(f"Need at least {minimum} samples, got {x.shape[0]}")
    return x


def _flag_negative(est: Estimate, what: str) -> Estimate:
    if est.estimate < 0.0:
        logger.warning("Negative %s estimate %.3e (stderr %.3e); reported unclamped", what, est.estimate, est.stderr)
        return est.model_copy(update={"flagged": True})
    return est


def kl_gaussian(p_var: Union[float, np.ndarray], q_var: Union[float, np.ndarray], d: int = 1) -> float:
    """
    KL(N(0, Sp) | N(0, Sq)).

    Scalars mean isotropic covariances in d dimensions:
    (d/2)(sp/sq - 1 - log(sp/sq)). Matrices use the general form
    (1/2)(tr(Sq^-1 Sp) - d - log det(Sq^-1 Sp)).
    """
    if np.ndim(p_var) == 0 and np.ndim(q_var) == 0:
        if not (p_var > 0.0 and q_var > 0.0):
            raise ParameterError(f"Variances must be positive, got {p_var}, {q_var}")
        ratio = float(p_var) / float(q_var)
        return 0.5 * d * (ratio - 1.0 - math.log(ratio))
    Sp = np.atleast_2d(np.asarray(p_var, dtype=float))
    Sq = np.atleast_2d(np.asarray(q_var, dtype=float))
    if np.any(np.linalg.eigvalsh(Sp) <= 0.0) or np.any(np.linalg.eigvalsh(Sq) <= 0.0):
        raise ParameterError("Covariances must be positive definite")
    M = np.linalg.solve(Sq, Sp)
    sign, logdet = np.linalg.slogdet(M)
    return 0.5 * float(np.trace(M) - Sp.shape[0] - logdet)


def log_partition(model: PotentialModel, extent: float = 25.0, n_nodes: Optional[int] = None) -> float:
    """log Z of exp(-U): the model's closed form, or trapezoid quadrature on [-extent, extent]^d (d <= 2)."""
    if model.log_normalizer is not None:
        return float(model.log_normalizer)
    d = model.d
    if d > 2:
        raise DomainError(f"log Z by quadrature needs d <= 2, got d={d}")
    n = (20001 if d == 1 else 801) if n_nodes is None else n_nodes
    axis = np.linspace(-extent, extent, n)
    step = axis[1] - axis[0]
    if d == 1:
        logw = -np.asarray(model.value(axis[:, None]), dtype=float)
        weights = np.full(n, step)
        weights[[0, -1]] *= 0.5
        return float(logsumexp(logw, b=weights))
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    logw = -np.asarray(model.value(np.column_stack([xx.ravel(), yy.ravel()])), dtype=float)
    w1 = np.full(n, step)
    w1[[0, -1]] *= 0.5
    return float(logsumexp(logw, b=np.outer(w1, w1).ravel()))


def inverse_cdf(grid: np.ndarray, potential_values: np.ndarray):
    """Quantile function of exp(-f) on a 1-D grid (linear interpolation of the trapezoid CDF)."""
    w = np.exp(-(potential_values - potential_values.min()))
    cdf = cumulative_trapezoid(w, grid, initial=0.0)
    cdf /= cdf[-1]
    return lambda u: np.interp(u, cdf, grid)


# ---------------------------------------------------------------------------
# KL
# ---------------------------------------------------------------------------

def _kde_grid(x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    n, d = x.shape
    # sorted columns keep the bandwidth independent of row order
    h = n ** (-1.0 / (d + 4)) * np.sort(x, axis=0).std(axis=0, ddof=1)
    h = np.where(h > 0.0, h, 1e-3)
    bins = 512 if d == 1 else 192
    edges = [np.linspace(x[:, j].min() - 4.0 * h[j], x[:, j].max() + 4.0 * h[j], bins + 1) for j in range(d)]
    return edges, h


def _plugin_kl(counts: np.ndarray, sigma_bins: np.ndarray, log_q: np.ndarray) -> float:
    smoothed = gaussian_filter(counts.astype(float), sigma=sigma_bins, mode="constant", truncate=4.0)
    P = smoothed / smoothed.sum()
    keep = P > 0.0
    return float(np.sum(P[keep] * (np.log(P[keep]) - log_q[keep])))


def kl_quadrature(samples: np.ndarray, model: PotentialModel, rng: Optional[np.random.Generator] = None,
                  n_boot: int = N_BOOTSTRAP) -> Estimate:
    x = _as_samples(samples, MIN_KL_SAMPLES)
    n, d = x.shape
    if d > 2:
        raise DomainError(f"Quadrature KL needs d <= 2, got d={d}")
    edges, h = _kde_grid(x)
    counts, _ = np.histogramdd(x, bins=edges)
    widths = np.array([e[1] - e[0] for e in edges])
    centers = [0.5 * (e[:-1] + e[1:]) for e in edges]
    mesh = np.meshgrid(*centers, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    log_q = (-np.asarray(model.value(pts), dtype=float) - log_partition(model)
             + float(np.sum(np.log(widths)))).reshape(counts.shape)
    sigma_bins = h / widths

    point = _plugin_kl(counts, sigma_bins, log_q)
    rng = _default_rng(rng)
    probs = counts.ravel() / n
    boot = np.array([_plugin_kl(rng.multinomial(n, probs).reshape(counts.shape), sigma_bins, log_q)
                     for _ in range(n_boot)])
    est = Estimate(estimate=2.0 * point - float(boot.mean()), stderr=float(boot.std(ddof=1)), method="quadrature",
                   n=n, notes=f"plug-in {point:.6g}, bandwidth {np.round(h, 6).tolist()}")
    return _flag_negative(est, "KL")


def entropy_knn(samples: np.ndarray, k: int = KNN_K) -> tuple[float, np.ndarray]:
    """
    Kozachenko-Leonenko entropy psi(n) - psi(k) + log V_d + (d/n) sum_i log eps_i.

    Returns:
        Entropy estimate and the per-sample log k-th neighbour distances
    """
    x = _as_samples(samples, k + 1)
    n, d = x.shape
    dist, _ = cKDTree(x).query(x, k=k + 1)
    eps = dist[:, -1]
    if np.any(eps <= 0.0):
        logger.warning("%d duplicate rows give zero neighbour distances", int(np.sum(eps <= 0.0)))
        eps = np.where(eps > 0.0, eps, np.min(eps[eps > 0.0]) if np.any(eps > 0.0) else 1e-300)
    log_eps = np.log(eps)
    log_vd = 0.5 * d * math.log(math.pi) - float(gammaln(0.5 * d + 1.0))
    entropy = float(digamma(n) - digamma(k) + log_vd + d * log_eps.mean())
    return entropy, log_eps


def kl_knn(samples: np.ndarray, model: PotentialModel, k: int = KNN_K) -> Estimate:
    """KL = -H(p) + E_p[U] + log Z with the kNN entropy; stderr from the per-sample terms."""
    x = _as_samples(samples, MIN_KL_SAMPLES)
    n, d = x.shape
    if d > 10:
        raise DomainError(f"kNN KL is supported for d <= 10, got d={d}")
    entropy, log_eps = entropy_knn(x, k)
    U = np.asarray(model.value(x), dtype=float)
    terms = U - d * log_eps
    est = Estimate(estimate=-entropy + float(U.mean()) + log_partition(model),
                   stderr=float(terms.std(ddof=1) / math.sqrt(n)), method="knn", n=n, notes=f"k={k}")
    return _flag_negative(est, "KL")


def kl_knn_two_sample(samples_p: np.ndarray, samples_q: np.ndarray, k: int = KNN_K) -> Estimate:
    """(d/n) sum_i log(nu_k(i) / rho_k(i)) + log(m / (n - 1)) with nu to Q and rho within P."""
    x = _as_samples(samples_p, MIN_KL_SAMPLES)
    y = _as_samples(samples_q, k)
    n, d = x.shape
    m = y.shape[0]
    rho = cKDTree(x).query(x, k=k + 1)[0][:, -1]
    nu = cKDTree(y).query(x, k=k)[0]
    nu = nu[:, -1] if nu.ndim == 2 else nu
    ok = (rho > 0.0) & (nu > 0.0)
    terms = d * np.log(nu[ok] / rho[ok])
    est = Estimate(estimate=float(terms.mean() + math.log(m / (n - 1.0))),
                   stderr=float(terms.std(ddof=1) / math.sqrt(terms.size)), method="knn_two_sample", n=n,
                   notes=f"k={k}, m={m}")
    return _flag_negative(est, "KL")


def kl_estimate(samples: np.ndarray, model: PotentialModel, method: str = "quadrature",
                rng: Optional[np.random.Generator] = None, reference: Optional[np.ndarray] = None,
                n_boot: int = N_BOOTSTRAP) -> Estimate:
    """
    KL(p | pi) of the sample law p against pi ~ exp(-U).

    Args:
        samples: (n, d) batch, n >= 100
        model: Target potential
        method: "quadrature" (d <= 2) or "knn" (d <= 10)
        rng: Bootstrap stream
        reference: Draws from pi for the two-sample kNN estimator when log Z is unavailable

    Returns:
        Estimate with a bootstrap (quadrature) or per-sample (knn) standard error
    """
    if method == "quadrature":
        return kl_quadrature(samples, model, rng, n_boot)
    if method == "knn":
        if model.log_normalizer is None and model.d > 2:
            if reference is None:
                raise ConfigurationError("kNN KL in d > 2 needs log Z or reference samples from the target")
            return kl_knn_two_sample(samples, reference)
        return kl_knn(samples, model)
    raise ConfigurationError(f"Unknown KL method '{method}' (quadrature, knn)")


# ---------------------------------------------------------------------------
# TV
# ---------------------------------------------------------------------------

def _fd_edges(column: np.ndarray) -> np.ndarray:
    n = column.size
    lo, hi = float(column.min()), float(column.max())
    iqr = float(np.subtract(*np.percentile(column, [75, 25])))
    width = 2.0 * iqr * n ** (-1.0 / 3.0)
    bins = 1 if width <= 0.0 or hi <= lo else int(min(MAX_TV_BINS, max(1, math.ceil((hi - lo) / width))))
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def _bin_masses(model: PotentialModel, edges: list[np.ndarray], log_z: float, sub: int = 8) -> np.ndarray:
    """Mass of pi in every bin by midpoint sub-quadrature."""
    d = len(edges)
    if d == 1:
        e = edges[0]
        width = np.diff(e)
        offsets = (np.arange(sub) + 0.5) / sub
        pts = (e[:-1, None] + width[:, None] * offsets[None, :]).ravel()
        dens = np.exp(-np.asarray(model.value(pts[:, None]), dtype=float) - log_z).reshape(-1, sub)
        return dens.mean(axis=1) * width
    ex, ey = edges
    fx = ((ex[:-1, None] + np.diff(ex)[:, None] * ((np.arange(sub) + 0.5) / sub)[None, :])).ravel()
    fy = ((ey[:-1, None] + np.diff(ey)[:, None] * ((np.arange(sub) + 0.5) / sub)[None, :])).ravel()
    xx, yy = np.meshgrid(fx, fy, indexing="ij")
    dens = np.exp(-np.asarray(model.value(np.column_stack([xx.ravel(), yy.ravel()])), dtype=float) - log_z)
    dens = dens.reshape(len(ex) - 1, sub, len(ey) - 1, sub).mean(axis=(1, 3))
    return dens * np.outer(np.diff(ex), np.diff(ey))


def tv_estimate(samples: np.ndarray, model: PotentialModel, rng: Optional[np.random.Generator] = None,
                n_boot: int = N_BOOTSTRAP) -> Estimate:
    """
    Half L1 distance between the histogram of the samples and pi on the same bins,
    plus the mass of pi outside the histogram range.

    The floor field is the expected value of the estimate for samples drawn from
    pi itself, (1/2) sum_j sqrt(2 Q_j (1 - Q_j) / (pi n)).
    """
    x = _as_samples(samples, MIN_KL_SAMPLES)
    n, d = x.shape
    if d > 2:
        raise DomainError(f"Histogram TV needs d <= 2, got d={d}")
    edges = [_fd_edges(x[:, j]) for j in range(d)]
    counts, _ = np.histogramdd(x, bins=edges)
    Q = _bin_masses(model, edges, log_partition(model))
    outside = max(0.0, 1.0 - float(Q.sum()))

    def tv(c: np.ndarray) -> float:
        return 0.5 * (float(np.abs(c / n - Q).sum()) + outside)

    rng = _default_rng(rng, 1)
    probs = counts.ravel() / n
    boot = np.array([tv(rng.multinomial(n, probs).reshape(counts.shape)) for _ in range(n_boot)])
    floor = 0.5 * float(np.sum(np.sqrt(2.0 * Q * np.clip(1.0 - Q, 0.0, None) / (math.pi * n))))
    return Estimate(estimate=tv(counts), stderr=float(boot.std(ddof=1)), method="histogram", floor=floor, n=n,
                    notes=f"bins {[len(e) - 1 for e in edges]}, pi mass outside {outside:.3e}")


# ---------------------------------------------------------------------------
# W2
# ---------------------------------------------------------------------------

def _w2_sorted(p_sorted: np.ndarray, q: np.ndarray) -> float:
    n = p_sorted.size
    if q.size == n:
        return math.sqrt(float(np.mean((p_sorted - np.sort(q)) ** 2)))
    levels = (np.arange(n) + 0.5) / n
    return math.sqrt(float(np.mean((p_sorted - np.quantile(q, levels)) ** 2)))


def _resampled(point: float, boot: np.ndarray, n: int) -> Estimate:
    """
    Bootstrap stderr plus the noise floor sqrt(E*[W2^2] - W2^2): the upward bias
    of the plug-in W2 at this sample size, which is what two batches from the
    same law measure.
    """
    floor = math.sqrt(max(float(np.mean(boot**2)) - point**2, 0.0))
    return Estimate(estimate=point, stderr=float(boot.std(ddof=1)), method="quantile", floor=floor, n=n)


def _w2_model_1d(x: np.ndarray, model: PotentialModel, rng: np.random.Generator, n_boot: int,
                 extent: float = 25.0) -> Estimate:
    n = x.size
    grid = np.linspace(-extent, extent, 20001)
    quantile = inverse_cdf(grid, np.asarray(model.value(grid[:, None]), dtype=float))
    target = quantile((np.arange(n) + 0.5) / n)
    point = math.sqrt(float(np.mean((np.sort(x) - target) ** 2)))
    boot = np.array([math.sqrt(float(np.mean((np.sort(rng.choice(x, n)) - target) ** 2)))
                     for _ in range(n_boot)])
    return _resampled(point, boot, n)


def w2_estimate(samples_p: np.ndarray, target: Union[np.ndarray, PotentialModel],
                rng: Optional[np.random.Generator] = None, n_boot: int = N_BOOTSTRAP,
                subsample: int = W2_SUBSAMPLE, draws: int = W2_DRAWS) -> Estimate:
    """
    W2 between a batch and a second batch, or a 1-D target potential.

    d = 1: exact sorted coupling (model targets by quadrature quantiles), bootstrap stderr.
    d >= 2: exact assignment (scipy linear_sum_assignment) on subsamples of at most
    512 rows, averaged over 8 draws; the spread over draws gives the stderr. Batches
    of equal size reuse the same row indices on both sides.
    """
    x = _as_samples(samples_p, MIN_W2_SAMPLES)
    n, d = x.shape
    rng = _default_rng(rng, 2)
    if isinstance(target, PotentialModel):
        if d != 1:
            raise ConfigurationError("W2 against a potential needs d = 1; pass reference samples instead")
        return _w2_model_1d(x[:, 0], target, rng, n_boot)

    y = _as_samples(target, MIN_W2_SAMPLES)
    if y.shape[1] != d:
        raise ParameterError(f"Dimension mismatch: {d} vs {y.shape[1]}")
    m = y.shape[0]
    if d == 1:
        xs = np.sort(x[:, 0])
        point = _w2_sorted(xs, y[:, 0])
        boot = np.array([_w2_sorted(np.sort(rng.choice(x[:, 0], n)), rng.choice(y[:, 0], m))
                         for _ in range(n_boot)])
        return _resampled(point, boot, n)

    size = min(subsample, n, m)
    values = []
    for _ in range(draws):
        ip = rng.choice(n, size, replace=False)
        iq = ip if m == n else rng.choice(m, size, replace=False)
        cost = cdist(x[ip], y[iq], metric="sqeuclidean")
        rows, cols = linear_sum_assignment(cost)
        values.append(math.sqrt(float(cost[rows, cols].mean())))
    values = np.array(values)
    stderr = float(values.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return Estimate(estimate=float(values.mean()), stderr=stderr, method="assignment", n=n,
                    notes=f"{draws} subsamples of {size}")
