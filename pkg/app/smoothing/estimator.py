"""
Monte Carlo oracle for the smoothed potential U_mu(x) = E U(x + mu xi) and its
stochastic gradient g_mu(x) = grad U(x + mu xi), xi ~ N_p(0, I_d).
"""
import logging
from typing import Optional

import numpy as np

from app.potentials.models import PotentialModel
from app.smoothing import pgauss
from app.smoothing.schemas import GradEstimate, MCEstimate, SmoothingConfig

logger = logging.getLogger(__name__)

# draws evaluated per vectorized call
_CHUNK = 1 << 16


class RunningMoments:
    """Chunk-merged mean and second central moment (Chan et al. update)."""

    def __init__(self, dim: Optional[int] = None):
        shape = () if dim is None else (dim,)
        self.n = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def update(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        k = values.shape[0]
        if k == 0:
            return
        chunk_mean = values.mean(axis=0)
        chunk_m2 = ((values - chunk_mean) ** 2).sum(axis=0)
        total = self.n + k
        delta = chunk_mean - self.mean
        self.mean = self.mean + delta * (k / total)
        self.m2 = self.m2 + chunk_m2 + delta**2 * (self.n * k / total)
        self.n = total

    @property
    def variance(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.n - 1)

    @property
    def stderr(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.m2)
        return np.sqrt(self.variance / self.n)


def draw_perturbations(cfg: SmoothingConfig, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    """Draw a perturbation batch; pass it back as xi= to reuse the same draws (common random numbers)."""
    return pgauss.sample(cfg.pg, rng, cfg.budget if n is None else n)


def _chunks(cfg: SmoothingConfig, rng: np.random.Generator, xi: Optional[np.ndarray]):
    if xi is not None:
        for start in range(0, xi.shape[0], _CHUNK):
            yield xi[start:start + _CHUNK]
        return
    remaining = cfg.budget
    while remaining > 0:
        k = min(_CHUNK, remaining)
        yield pgauss.sample(cfg.pg, rng, k)
        remaining -= k


def estimate_value(model: PotentialModel, cfg: SmoothingConfig, x: np.ndarray,
                   rng: np.random.Generator, xi: Optional[np.ndarray] = None) -> MCEstimate:
    """
    Estimate U_mu(x) by the sample mean of U(x + mu xi_j).

    Args:
        model: Potential
        cfg: Smoothing radius, law and budget
        x: Point of shape (d,)
        rng: Stream for the perturbations
        xi: Optional pre-drawn perturbations (common random numbers)

    Returns:
        Mean and standard error of the mean
    """
    x = np.asarray(x, dtype=float)
    moments = RunningMoments()
    for block in _chunks(cfg, rng, xi):
        moments.update(model.value(x + cfg.mu * block))
    return MCEstimate(mean=float(moments.mean), stderr=float(moments.stderr), budget=moments.n)


def stochastic_grad(model: PotentialModel, cfg: SmoothingConfig, x: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """One draw of grad U(x + mu xi); mu = 0 returns grad U(x) without touching rng."""
    x = np.asarray(x, dtype=float)
    if cfg.mu == 0.0:
        return model.gradient(x)
    xi = pgauss.sample(cfg.pg, rng, 1)[0]
    return model.gradient(x + cfg.mu * xi)


def stochastic_grads(model: PotentialModel, cfg: SmoothingConfig, x: np.ndarray,
                     rng: np.random.Generator, n_draws: int) -> np.ndarray:
    """n_draws independent stochastic gradients at the same x, shape (n_draws, d)."""
    x = np.asarray(x, dtype=float)
    if cfg.mu == 0.0:
        return np.tile(model.gradient(x), (n_draws, 1))
    return model.gradient(x + cfg.mu * pgauss.sample(cfg.pg, rng, n_draws))


def estimate_grad(model: PotentialModel, cfg: SmoothingConfig, x: np.ndarray,
                  rng: np.random.Generator, xi: Optional[np.ndarray] = None) -> GradEstimate:
    """Average of cfg.budget stochastic gradients with per-coordinate standard errors."""
    x = np.asarray(x, dtype=float)
    moments = RunningMoments(model.d)
    for block in _chunks(cfg, rng, xi):
        moments.update(model.gradient(x + cfg.mu * block))
    return GradEstimate(mean=moments.mean.tolist(), stderr=moments.stderr.tolist(), budget=moments.n)


def estimate_grad_difference(model: PotentialModel, cfg: SmoothingConfig, x: np.ndarray, y: np.ndarray,
                             rng: np.random.Generator) -> GradEstimate:
    """grad U_mu(y) - grad U_mu(x) with the same perturbations at both points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    moments = RunningMoments(model.d)
    for block in _chunks(cfg, rng, None):
        shift = cfg.mu * block
        moments.update(model.gradient(y + shift) - model.gradient(x + shift))
    return GradEstimate(mean=moments.mean.tolist(), stderr=moments.stderr.tolist(), budget=moments.n)
