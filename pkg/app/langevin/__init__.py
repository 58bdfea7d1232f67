from app.langevin.schemas import ChainState, InitSpec, Regime, SampleBatch, StepSizePlan
from app.langevin.kernels import advance_batch, step, step_smoothed
from app.langevin.runner import init_gaussian, initial_kl_bound, resolve_H0, run_chain
from app.langevin.planner import (
    ar1_stationary_variance,
    compute_D3,
    compute_D4,
    kl_bound,
    kl_envelope,
    plan_lsi,
    plan_nonconvex_outside_ball,
    plan_poincare,
    plan_smoothed,
)

__all__ = [
    'ChainState',
    'InitSpec',
    'Regime',
    'SampleBatch',
    'StepSizePlan',
    'advance_batch',
    'step',
    'step_smoothed',
    'init_gaussian',
    'initial_kl_bound',
    'resolve_H0',
    'run_chain',
    'ar1_stationary_variance',
    'compute_D3',
    'compute_D4',
    'kl_bound',
    'kl_envelope',
    'plan_lsi',
    'plan_nonconvex_outside_ball',
    'plan_poincare',
    'plan_smoothed',
]
