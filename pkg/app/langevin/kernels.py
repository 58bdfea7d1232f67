"""
ULA and smoothed-ULA transition kernels.

    x_{k+1} = x_k - eta grad U(x_k) + sqrt(2 eta) z_k                  (ULA)
    x_{k+1} = x_k - eta grad U(x_k + mu xi_k) + sqrt(2 eta) z_k          (smoothed)
"""
import math
from typing import Optional

import numpy as np

from app.errors import ChainDivergenceError, ParameterError
from app.langevin.schemas import ChainState
from app.potentials.models import PotentialModel
from app.smoothing import pgauss
from app.smoothing.schemas import SmoothingConfig

DIVERGENCE_RADIUS = 1e8


def _advance(state: ChainState, drift: np.ndarray, eta: float, z: np.ndarray) -> ChainState:
    if not np.all(np.isfinite(drift)):
        raise ChainDivergenceError("Non-finite drift", state.stream_id, state.step_index, state.position)
    position = state.position - eta * drift + math.sqrt(2.0 * eta) * z
    if not np.all(np.isfinite(position)) or np.linalg.norm(position) > DIVERGENCE_RADIUS:
        raise ChainDivergenceError("Chain left the divergence ball", state.stream_id,
                                   state.step_index + 1, position)
    return ChainState(position=position, step_index=state.step_index + 1, stream_id=state.stream_id)


def step(state: ChainState, model: PotentialModel, eta: float, rng: Optional[np.random.Generator] = None,
         noise: Optional[np.ndarray] = None) -> ChainState:
    """
    One ULA step.

    Args:
        state: Current state
        model: Potential
        eta: Step size (0 only in tests)
        rng: Stream of the chain; z is drawn from it unless noise is given
        noise: Recorded standard normal vector z

    Returns:
        The next state
    """
    if eta < 0.0:
        raise ParameterError(f"Step size must be non-negative, got {eta}")
    x = np.asarray(state.position, dtype=float)
    z = rng.standard_normal(model.d) if noise is None else np.asarray(noise, dtype=float)
    return _advance(ChainState(x, state.step_index, state.stream_id), model.gradient(x), eta, z)


def step_smoothed(state: ChainState, model: PotentialModel, cfg: SmoothingConfig, eta: float,
                  rng: Optional[np.random.Generator] = None, noise: Optional[np.ndarray] = None,
                  perturbation: Optional[np.ndarray] = None) -> ChainState:
    """
    One smoothed-ULA step with a single fresh perturbation xi.

    xi is drawn before z. With mu = 0 nothing is drawn for xi, so the
    trajectory equals step() on the same stream.
    """
    if eta < 0.0:
        raise ParameterError(f"Step size must be non-negative, got {eta}")
    x = np.asarray(state.position, dtype=float)
    if cfg.mu > 0.0:
        xi = pgauss.sample(cfg.pg, rng, 1)[0] if perturbation is None else np.asarray(perturbation, dtype=float)
        drift = model.gradient(x + cfg.mu * xi)
    else:
        drift = model.gradient(x)
    z = rng.standard_normal(model.d) if noise is None else np.asarray(noise, dtype=float)
    return _advance(ChainState(x, state.step_index, state.stream_id), drift, eta, z)


def advance_batch(positions: np.ndarray, model: PotentialModel, eta: float, z: np.ndarray,
                  shifts: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Vectorized step for a block of chains.

    Args:
        positions: (n, d) current positions
        model: Potential
        eta: Step size
        z: (n, d) standard normal draws
        shifts: (n, d) mu * xi for the smoothed kernel, or None

    Returns:
        (n, d) new positions; divergence is checked by the caller
    """
    at = positions if shifts is None else positions + shifts
    return positions - eta * model.gradient(at) + math.sqrt(2.0 * eta) * z
