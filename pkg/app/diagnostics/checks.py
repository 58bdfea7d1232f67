"""
Inequality cross-checks between measured estimates and closed-form bounds.

Every check measures its left-hand side from samples and evaluates its
right-hand side from declared constants; the verdict is
lhs <= rhs + allowance + 3 stderr (see schemas.Check.compare).
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from app.convexify.isoperimetry import second_moment
from app.diagnostics.estimators import (
    _as_samples,
    _default_rng,
    inverse_cdf,
    kl_estimate,
    tv_estimate,
    w2_estimate,
)
from app.diagnostics.schemas import BiasFit, Check, DiagnosticsReport, Estimate
from app.errors import (
    ConfigurationError,
    DomainError,
    InsufficientSamplesError,
    ParameterError,
)
from app.potentials.models import PotentialModel
from app.potentials.schemas import DissipativitySpec, SmoothnessSpec
from app.smoothing import pgauss

logger = logging.getLogger(__name__)

SMOOTHING_W2_CONSTANT = 8.24
SMOOTHING_W2_MU_MAX = 0.05


def _sqrt_rhs(value: float, stderr: float, scale: float) -> tuple[float, float]:
    """sqrt(scale * value) and its spread over one stderr of value (finite difference)."""
    base = max(value, 0.0)
    rhs = math.sqrt(scale * base)
    return rhs, math.sqrt(scale * (base + stderr)) - rhs


def pinsker_check(kl: Estimate, tv: Estimate) -> Check:
    """TV <= sqrt(KL / 2); the TV noise floor is granted as allowance."""
    rhs, rhs_se = _sqrt_rhs(kl.estimate, kl.stderr, 0.5)
    return Check.compare("pinsker", tv.estimate, rhs, stderr=math.hypot(tv.stderr, rhs_se), allowance=tv.floor,
                         notes=f"kl={kl.estimate:.4g}")


def talagrand_check(kl: Estimate, w2: Estimate, gamma: float) -> Check:
    """W2 <= sqrt(2 KL / gamma) for a target satisfying LSI(gamma)."""
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    rhs, rhs_se = _sqrt_rhs(kl.estimate, kl.stderr, 2.0 / gamma)
    return Check.compare("talagrand", w2.estimate, rhs, stderr=math.hypot(w2.stderr, rhs_se), allowance=w2.floor,
                         notes=f"gamma={gamma:.4g}")


def grad_moment_bound(spec: SmoothnessSpec, d: int, p: float) -> float:
    """2 (sum_i L_i)^2 d^(3/p)."""
    return 2.0 * spec.L_sum**2 * d ** (3.0 / p)


def grad_moment_check(samples: np.ndarray, model: PotentialModel, p: float = 2.0,
                      spec: Optional[SmoothnessSpec] = None) -> Check:
    """
    E_pi ||grad U||^2 <= 2 (sum_i L_i)^2 d^(3/p) on samples approximately from pi.

    Args:
        samples: (n, d) batch
        model: Target potential
        p: Shape exponent entering d^(3/p)
        spec: Constants to test; defaults to the model's declared smoothness
    """
    x = _as_samples(samples, 2)
    spec = model.smoothness if spec is None else spec
    sq = np.sum(np.asarray(model.gradient(x), dtype=float) ** 2, axis=-1)
    return Check.compare("grad_moment", float(sq.mean()), grad_moment_bound(spec, x.shape[1], p),
                         stderr=float(sq.std(ddof=1) / math.sqrt(sq.size)), notes=f"p={p:g}")


def moment_kl_terms(spec: SmoothnessSpec, diss: DissipativitySpec, d: int, U0: float) -> tuple[float, float]:
    """
    The dimension and potential offsets of the moment-from-KL bound:

    d~  = (d/beta)[(beta/2) log pi + log(4 beta/a) + (1 - beta/2) log(d / 2e)]
    mu~ = (1/2) log(2/beta) + sum_i (L_i/(alpha_i + 1)) (2b/a)^((alpha_i + 1)/beta) + b + |U(0)|
    """
    a, b, beta = diss.a, diss.b, diss.beta
    d_tilde = (d / beta) * (0.5 * beta * math.log(math.pi) + math.log(4.0 * beta / a)
                            + (1.0 - 0.5 * beta) * math.log(d / (2.0 * math.e)))
    mu_tilde = (0.5 * math.log(2.0 / beta)
                + sum(L_i / (a_i + 1.0) * (2.0 * b / a) ** ((a_i + 1.0) / beta) for L_i, a_i in spec.components)
                + b + abs(U0))
    return d_tilde, mu_tilde


def moment_from_kl_check(samples: np.ndarray, model: PotentialModel, kl_upper: float,
                         diss: Optional[DissipativitySpec] = None) -> Check:
    """E ||x||^beta <= (4 beta / a)(kl_upper + d~ + mu~) for a beta-dissipative target."""
    diss = model.dissipativity if diss is None else diss
    if diss is None:
        raise ConfigurationError(f"Potential '{model.name}' declares no dissipativity")
    x = _as_samples(samples, 2)
    d = x.shape[1]
    d_tilde, mu_tilde = moment_kl_terms(model.smoothness, diss, d, model.value_at_zero())
    rhs = 4.0 * diss.beta / diss.a * (kl_upper + d_tilde + mu_tilde)
    moments = np.linalg.norm(x, axis=1) ** diss.beta
    return Check.compare("moment_from_kl", float(moments.mean()), rhs,
                         stderr=float(moments.std(ddof=1) / math.sqrt(moments.size)),
                         notes=f"d_tilde={d_tilde:.6g}, mu_tilde={mu_tilde:.6g}, kl_upper={kl_upper:.4g}")


def bias_scaling_fit(etas: Sequence[float], kls: Sequence[float]) -> BiasFit:
    """Least-squares line through (log eta, log KL)."""
    eta = np.asarray(etas, dtype=float)
    kl = np.asarray(kls, dtype=float)
    if eta.size != kl.size:
        raise ParameterError(f"{eta.size} step sizes but {kl.size} KL values")
    if eta.size < 4:
        raise InsufficientSamplesError(f"Need at least 4 (eta, KL) pairs, got {eta.size}")
    if np.any(kl <= 0.0) or np.any(eta <= 0.0):
        raise ParameterError("Step sizes and KL values must be positive for a log-log fit")
    lx, ly = np.log(eta), np.log(kl)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / total if total > 0.0 else 1.0
    return BiasFit(slope=float(slope), intercept=float(intercept), r2=r2, n_points=int(eta.size))


def smoothing_w2_bound(spec: SmoothnessSpec, mu: float, d: int, p: float, E2: float) -> float:
    """8.24 N L mu^(1+alpha) d^(2/p) E2."""
    return SMOOTHING_W2_CONSTANT * spec.N * spec.L * mu ** (1.0 + spec.alpha) * d ** (2.0 / p) * E2


def smoothed_potential_grid(model: PotentialModel, grid: np.ndarray, mu: float, xi: np.ndarray,
                            chunk: int = 64) -> np.ndarray:
    """U_mu on a 1-D grid as the average of U(x + mu xi_j) over one shared perturbation batch."""
    total = np.zeros(grid.size)
    for start in range(0, xi.shape[0], chunk):
        shift = mu * xi[start:start + chunk, 0]
        pts = (grid[:, None] + shift[None, :]).reshape(-1, 1)
        total += np.asarray(model.value(pts), dtype=float).reshape(grid.size, -1).sum(axis=1)
    return total / xi.shape[0]


def smoothing_w2_check(model: PotentialModel, mu: float, p: float = 2.0, E2: Optional[float] = None,
                       n: int = 100_000, rng: Optional[np.random.Generator] = None, budget: int = 4096,
                       extent: float = 25.0) -> Check:
    """
    W2^2(pi, pi_mu) <= 8.24 N L mu^(1+alpha) d^(2/p) E2 in d = 1.

    pi_mu ~ exp(-U_mu) is built by quadrature on 8001 nodes over [-extent, extent]
    with U_mu from one shared batch of `budget` perturbations; both laws are
    sampled by inverse CDF from the same n uniforms, which is the optimal
    coupling in d = 1.

    Args:
        E2: Second moment of pi; computed by quadrature when None
    """
    if model.d != 1:
        raise DomainError(f"The smoothing W2 check runs in d = 1, got d={model.d}")
    if mu < 0.0:
        raise ParameterError(f"mu must be non-negative, got {mu}")
    if mu > SMOOTHING_W2_MU_MAX:
        logger.warning("mu=%.4g exceeds %.2g; the W2 bound is stated for small mu", mu, SMOOTHING_W2_MU_MAX)
    if E2 is None:
        E2 = second_moment(model.value, 1, extent)
    rhs = smoothing_w2_bound(model.smoothness, mu, 1, p, E2)
    if mu == 0.0:
        return Check.compare("smoothing_w2", 0.0, rhs, notes="mu=0")

    rng = _default_rng(rng, 3)
    grid = np.linspace(-extent, extent, 8001)
    xi = pgauss.sample(pgauss.make_params(p, 1), rng, budget)
    q_pi = inverse_cdf(grid, np.asarray(model.value(grid[:, None]), dtype=float))
    q_mu = inverse_cdf(grid, smoothed_potential_grid(model, grid, mu, xi))
    u = rng.random(n)
    sq = (q_pi(u) - q_mu(u)) ** 2
    return Check.compare("smoothing_w2", float(sq.mean()), rhs, stderr=float(sq.std(ddof=1) / math.sqrt(n)),
                         notes=f"mu={mu:g}, p={p:g}, E2={E2:.6g}, budget={budget}")


def diagnose(samples: np.ndarray, model: PotentialModel, gamma: Optional[float] = None,
             kl_method: str = "quadrature", rng: Optional[np.random.Generator] = None,
             reference: Optional[np.ndarray] = None, p: float = 2.0,
             n_boot: int = 200) -> DiagnosticsReport:
    """
    Estimate KL, TV and W2 of a batch against the target and run the applicable checks.

    Estimators outside their supported dimension are skipped with a note.
    Pinsker needs KL and TV; Talagrand additionally needs gamma and W2; the
    moment-from-KL check uses kl + 3 stderr as its trusted upper bound.
    """
    x = _as_samples(samples, 2)
    n, d = x.shape
    report = DiagnosticsReport(potential=model.name, n=n, d=d)

    def attempt(label: str, fn):
        try:
            return fn()
        except (DomainError, ConfigurationError, InsufficientSamplesError) as e:
            logger.info("Skipping %s: %s", label, e)
            report.notes.append(f"{label} skipped: {e}")
            return None

    report.kl = attempt("kl", lambda: kl_estimate(x, model, kl_method, rng, reference, n_boot))
    report.tv = attempt("tv", lambda: tv_estimate(x, model, rng, n_boot))
    w2_target = model if d == 1 else reference
    if w2_target is not None:
        report.w2 = attempt("w2", lambda: w2_estimate(x, w2_target, rng, n_boot))
    else:
        report.notes.append("w2 skipped: d > 1 needs reference samples")

    if report.kl is not None and report.tv is not None:
        report.checks.append(pinsker_check(report.kl, report.tv))
    if gamma is not None and report.kl is not None and report.w2 is not None:
        report.checks.append(talagrand_check(report.kl, report.w2, gamma))
    report.checks.append(grad_moment_check(x, model, p))
    if model.dissipativity is not None and report.kl is not None and n >= 2:
        kl_upper = max(report.kl.estimate, 0.0) + 3.0 * report.kl.stderr
        report.checks.append(moment_from_kl_check(x, model, kl_upper))
    return report
