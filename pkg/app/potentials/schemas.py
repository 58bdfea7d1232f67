"""
Pydantic schemas for declared potential constants and check reports.
"""
from typing import Optional

from pydantic import BaseModel, Field, field_validator


class SmoothnessSpec(BaseModel):
    """Mixture weak smoothness: ||grad U(x) - grad U(y)|| <= sum_i L_i ||x - y||^alpha_i."""

    model_config = {"frozen": True}

    components: list[tuple[float, float]] = Field(
        description="Ordered (L_i, alpha_i) pairs with 0 < alpha_1 < ... < alpha_N <= 1 and L_i > 0",
        min_length=1,
    )

    @field_validator("components")
    @classmethod
    def _check_components(cls, components: list[tuple[float, float]]) -> list[tuple[float, float]]:
        previous = 0.0
        for L_i, alpha_i in components:
            if not L_i > 0:
                raise ValueError(f"L_i must be positive, got {L_i}")
            if not (previous < alpha_i <= 1.0):
                raise ValueError(
                    f"exponents must be strictly increasing in (0, 1], got {alpha_i} after {previous}"
                )
            previous = alpha_i
        return components

    @property
    def N(self) -> int:
        return len(self.components)

    @property
    def alpha(self) -> float:
        """Smallest exponent alpha_1."""
        return self.components[0][1]

    @property
    def alpha_N(self) -> float:
        return self.components[-1][1]

    @property
    def L(self) -> float:
        """max_i L_i."""
        return max(L_i for L_i, _ in self.components)

    @property
    def L_N(self) -> float:
        """Constant of the largest exponent."""
        return self.components[-1][0]

    @property
    def L_sum(self) -> float:
        return sum(L_i for L_i, _ in self.components)

    def scaled(self, factor: float) -> "SmoothnessSpec":
        """Same exponents, every L_i multiplied by factor."""
        return SmoothnessSpec(components=[(L_i * factor, a_i) for L_i, a_i in self.components])


class DissipativitySpec(BaseModel):
    """<grad U(x), x> >= a ||x||^beta - b."""

    model_config = {"frozen": True}

    a: float = Field(description="Radial drift strength", gt=0.0)
    b: float = Field(description="Offset; 0 is allowed for potentials stationary at the origin", ge=0.0)
    beta: float = Field(description="Growth exponent", ge=1.0)


class DegenerateConvexity(BaseModel):
    """Hessian floor mu (1 + r^2)^(-theta/2) outside the convexity ball."""

    model_config = {"frozen": True}

    mu: float = Field(description="Strong convexity level; 0 for merely convex tails", ge=0.0)
    theta: float = Field(description="Degeneracy exponent", ge=0.0, le=1.0)


class CheckReport(BaseModel):
    """Outcome of one sampled verification."""

    name: str = Field(description="Check identifier")
    statistic: float = Field(description="The quantity named by the check (max violation, min slack, osc...)")
    bound: Optional[float] = Field(default=None, description="Formula value compared against, when scalar")
    max_violation: float = Field(description="Largest amount by which the measured side exceeds the allowed side")
    passed: bool = Field(description="max_violation <= tolerance")
    tolerance: float = Field(default=1e-8, description="Allowed violation")
    n_evaluated: int = Field(default=0, description="Number of points or pairs examined")
    witness: Optional[list[float]] = Field(default=None, description="Coordinates of the worst point (pairs concatenated)")
    notes: str = Field(default="", description="Free-form context such as flagged regimes")
