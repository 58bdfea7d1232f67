"""
Pydantic schemas and row types for the smoothing oracle.
"""
from typing import List, TypedDict

from pydantic import BaseModel, Field

from app.smoothing.pgauss import PGaussParams


class SmoothingConfig(BaseModel):
    """Smoothing radius, perturbation law and Monte Carlo budget."""

    model_config = {"frozen": True}

    mu: float = Field(description="Smoothing radius; 0 is the unsmoothed limit", ge=0.0)
    pg: PGaussParams = Field(description="Perturbation law N_p(0, I_d)")
    budget: int = Field(default=10_000, description="Monte Carlo draws per query", ge=1)


class MCEstimate(BaseModel):
    """Scalar Monte Carlo estimate."""

    mean: float
    stderr: float
    budget: int


class GradEstimate(BaseModel):
    """Vector Monte Carlo estimate with per-coordinate standard errors."""

    mean: list[float]
    stderr: list[float]
    budget: int

    @property
    def stderr_norm(self) -> float:
        return sum(s * s for s in self.stderr) ** 0.5


class BoundRow(TypedDict):
    """One line of a smoothing verification report."""

    check: str
    point: str
    bound: float
    estimate: float
    stderr: float
    margin: float
    passed: bool
    flagged: bool


class SmoothingReport(BaseModel):
    """Rows of one checker plus the verdict."""

    name: str
    rows: List[dict] = Field(default_factory=list, description="BoundRow records")
    passed: bool = True
    worst_margin: float = Field(default=float("inf"), description="min over rows of bound + slack - measured")
    flagged: bool = Field(default=False, description="Some rows lie outside the small-mu regime of the bounds")
    budget: int = 0
    notes: str = ""

    def add(self, row: BoundRow) -> None:
        self.rows.append(dict(row))
        self.passed = self.passed and row["passed"]
        self.flagged = self.flagged or row["flagged"]
        self.worst_margin = min(self.worst_margin, row["margin"])
