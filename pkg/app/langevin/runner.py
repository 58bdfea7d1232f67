"""
Chain runner and Gaussian initialization.

Chain i owns the stream make_rng(master_seed, i). Chains are advanced in fixed
blocks; within a block each chain pre-draws its noise in chunks from its own
stream, so the result does not depend on block scheduling or worker count.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from app.errors import ChainDivergenceError, ParameterError
from app.langevin.kernels import DIVERGENCE_RADIUS, advance_batch
from app.langevin.schemas import InitSpec, SampleBatch, StepSizePlan
from app.potentials.models import PotentialModel
from app.rng import make_rng
from app.smoothing import pgauss
from app.smoothing.schemas import SmoothingConfig

logger = logging.getLogger(__name__)

BLOCK_SIZE = 256
NOISE_CHUNK = 512


def initial_kl_bound(model: PotentialModel) -> float:
    """U(0) - (d/2) log(2 pi e / L) + sum_i (L/(1+alpha_i)) (d/L)^((1+alpha_i)/2)."""
    spec, d = model.smoothness, model.d
    L = spec.L
    return (model.value_at_zero()
            - 0.5 * d * math.log(2.0 * math.pi * math.e / L)
            + sum(L / (1.0 + a_i) * (d / L) ** ((1.0 + a_i) / 2.0) for _, a_i in spec.components))


def init_gaussian(model: PotentialModel) -> InitSpec:
    """
    Initialization N(0, I/L) with the bound on H(p0 | pi).

    The bound drops the log partition function of pi, so it can be negative.
    When the model knows log Z, the corrected value bound + log Z is reported too.
    """
    bound = initial_kl_bound(model)
    normalized = None if model.log_normalizer is None else bound + model.log_normalizer
    return InitSpec(d=model.d, scale=1.0 / math.sqrt(model.smoothness.L), H0_bound=bound,
                    H0_bound_normalized=normalized)


def resolve_H0(init: InitSpec, H0: Optional[float] = None, floor: float = 1e-3) -> float:
    """User value if given, otherwise the bound clamped to floor."""
    if H0 is not None:
        if H0 <= 0.0:
            raise ParameterError(f"H0 must be positive, got {H0}")
        return float(H0)
    if init.H0_bound < floor:
        logger.warning("Initial KL bound %.6g is below %.0e; clamping", init.H0_bound, floor)
        return floor
    return init.H0_bound


def _run_block(model: PotentialModel, chain_ids: range, eta: float, k: int, init: InitSpec,
               master_seed: int, smoothing: Optional[SmoothingConfig],
               thin: Optional[int]) -> tuple[np.ndarray, Optional[np.ndarray]]:
    gens = [make_rng(master_seed, i) for i in chain_ids]
    x = np.vstack([init.sample(g, 1) for g in gens])
    d = model.d
    smoothed = smoothing is not None and smoothing.mu > 0.0
    frames = [x.copy()] if thin else []

    done = 0
    while done < k:
        m = min(NOISE_CHUNK, k - done)
        if smoothed:
            # per chunk: all m perturbations first, then all m noise vectors; not the per-step order of step_smoothed
            xi = np.stack([pgauss.sample(smoothing.pg, g, m) for g in gens], axis=0)
            shifts = smoothing.mu * xi
        z = np.stack([g.standard_normal((m, d)) for g in gens], axis=0)
        for t in range(m):
            x = advance_batch(x, model, eta, z[:, t], shifts[:, t] if smoothed else None)
            norms = np.sqrt(np.sum(x * x, axis=1))
            bad = ~(norms <= DIVERGENCE_RADIUS)
            if bad.any():
                row = int(np.argmax(bad))
                raise ChainDivergenceError("Chain diverged", chain_ids[row], done + t + 1, x[row])
            if thin and (done + t + 1) % thin == 0:
                frames.append(x.copy())
        done += m
    trajectory = np.stack(frames, axis=0) if thin else None
    return x, trajectory


def run_chain(model: PotentialModel, plan: StepSizePlan, init: InitSpec, n_chains: int, master_seed: int,
              smoothing: Optional[SmoothingConfig] = None, workers: int = 1,
              thin: Optional[int] = None) -> SampleBatch:
    """
    Run n_chains independent chains for plan.k_iterations steps of size plan.eta.

    Args:
        model: Potential
        plan: Step size and iteration count
        init: Initialization law
        n_chains: Number of chains
        master_seed: Seed the per-chain streams derive from
        smoothing: Smoothing configuration for the smoothed kernel, None for plain ULA
        workers: Thread count; the output does not depend on it
        thin: Keep every thin-th state in the trajectory

    Returns:
        SampleBatch of final states (row i is chain i)

    Raises:
        ChainDivergenceError: with the chain id and step of the first failure
    """
    if n_chains < 1:
        raise ParameterError(f"n_chains must be >= 1, got {n_chains}")
    if thin is not None and thin < 1:
        raise ParameterError(f"thin must be >= 1, got {thin}")
    blocks = [range(s, min(s + BLOCK_SIZE, n_chains)) for s in range(0, n_chains, BLOCK_SIZE)]
    logger.info("Running %d chains x %d steps (eta=%.4g, %d blocks, %d workers)",
                n_chains, plan.k_iterations, plan.eta, len(blocks), workers)

    def job(ids: range):
        return _run_block(model, ids, plan.eta, plan.k_iterations, init, master_seed, smoothing, thin)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, blocks))
    else:
        results = [job(ids) for ids in blocks]

    samples = np.vstack([r[0] for r in results])
    trajectory = np.concatenate([r[1] for r in results], axis=1) if thin else None
    return SampleBatch(samples=samples, master_seed=master_seed, plan=plan, trajectory=trajectory, thin=thin)
