"""
Schemas for chain states, initializations, plans and sample batches.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field


class Regime(str, Enum):
    """Convergence theorem a plan is derived from."""

    LSI = "LSI"
    SMOOTHED = "SMOOTHED"
    POINCARE_DISSIPATIVE = "POINCARE_DISSIPATIVE"
    NONCONVEX_OUTSIDE_BALL = "NONCONVEX_OUTSIDE_BALL"


@dataclass(frozen=True)
class ChainState:
    """Position x_k of one chain after step_index steps."""

    position: np.ndarray
    step_index: int = 0
    stream_id: int = 0


class StepSizePlan(BaseModel):
    """Step size, iteration count and every constant that produced them."""

    model_config = {"frozen": True}

    eta: float = Field(description="Step size", ge=0.0)
    k_iterations: int = Field(description="Number of iterations", ge=0)
    regime: Regime
    constants: dict[str, float] = Field(default_factory=dict, description="D3, D4, gamma3, A, B, zeta, ...")
    caps: dict[str, float] = Field(default_factory=dict, description="Individual step-size caps; eta is their minimum")
    epsilon_target: float = Field(default=0.0, description="Target KL accuracy", ge=0.0)
    mu: Optional[float] = Field(default=None, description="Smoothing radius (sqrt(eta) for the smoothed regime)")
    aggressive: float = Field(default=1.0, description="Multiplier applied to eta after the caps", gt=0.0)
    off_theorem: bool = Field(default=False, description="eta or k no longer follow the theorem")

    def with_overrides(self, eta: Optional[float] = None, k: Optional[int] = None) -> "StepSizePlan":
        """Replace eta and/or k; the plan is then marked off-theorem."""
        if eta is None and k is None:
            return self
        update: dict = {"off_theorem": True}
        if eta is not None:
            update["eta"] = float(eta)
        if k is not None:
            update["k_iterations"] = int(k)
        return self.model_copy(update=update)

    def as_row(self) -> dict[str, object]:
        """Flat mapping for the plan CSV."""
        row: dict[str, object] = {
            "regime": self.regime.value,
            "eta": self.eta,
            "k_iterations": self.k_iterations,
            "epsilon_target": self.epsilon_target,
            "mu": "" if self.mu is None else self.mu,
            "aggressive": self.aggressive,
            "off_theorem": self.off_theorem,
        }
        row.update({f"const_{name}": value for name, value in sorted(self.constants.items())})
        row.update({f"cap_{name}": value for name, value in sorted(self.caps.items())})
        return row


@dataclass(frozen=True)
class InitSpec:
    """Gaussian initialization N(0, I/L) together with the initial KL bound."""

    d: int
    scale: float
    H0_bound: float
    H0_bound_normalized: Optional[float] = None

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return self.scale * rng.standard_normal((n, self.d))


@dataclass
class SampleBatch:
    """Final states of n chains (rows ordered by chain id) and an optional thinned trajectory."""

    samples: np.ndarray
    master_seed: int
    plan: Optional[StepSizePlan] = None
    trajectory: Optional[np.ndarray] = None
    thin: Optional[int] = None
    chain_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.chain_ids is None:
            self.chain_ids = np.arange(self.samples.shape[0])

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    @property
    def d(self) -> int:
        return int(self.samples.shape[1])
