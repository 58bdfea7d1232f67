"""
Potential models: U with value/gradient evaluators and declared constants.

Evaluators take a point of shape (d,) or a batch of shape (n, d) and operate
along the last axis, so chains can be advanced as one array.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from app.potentials.schemas import DegenerateConvexity, DissipativitySpec, SmoothnessSpec

ValueFn = Callable[[np.ndarray], np.ndarray]
GradientFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PotentialModel:
    """A potential U for the target pi proportional to exp(-U)."""

    name: str
    d: int
    value: ValueFn
    gradient: GradientFn
    smoothness: SmoothnessSpec
    dissipativity: Optional[DissipativitySpec] = None
    convexity_radius: Optional[float] = None
    degenerate_convexity: Optional[DegenerateConvexity] = None
    stationary_at_zero: bool = False
    log_normalizer: Optional[float] = None
    params: dict[str, Any] = field(default_factory=dict)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(x)

    def with_smoothness(self, smoothness: SmoothnessSpec) -> "PotentialModel":
        return replace(self, smoothness=smoothness)

    def with_dissipativity(self, dissipativity: Optional[DissipativitySpec]) -> "PotentialModel":
        return replace(self, dissipativity=dissipativity)

    def value_at_zero(self) -> float:
        return float(self.value(np.zeros(self.d)))

    def describe(self) -> dict[str, Any]:
        """Plain-dict summary used in manifests and summaries."""
        return {
            "name": self.name,
            "d": self.d,
            "params": dict(self.params),
            "smoothness": [list(c) for c in self.smoothness.components],
            "dissipativity": None if self.dissipativity is None else self.dissipativity.model_dump(),
            "convexity_radius": self.convexity_radius,
            "stationary_at_zero": self.stationary_at_zero,
        }


def as_points(x: np.ndarray, d: int) -> np.ndarray:
    """View x as a batch of shape (n, d)."""
    pts = np.asarray(x, dtype=float)
    return pts.reshape(-1, d)
