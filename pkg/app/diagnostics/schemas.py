"""
Pydantic schemas for diagnostic estimates, inequality checks and the report.
"""
from typing import Optional

from pydantic import BaseModel, Field

SLACK = 3.0


class Estimate(BaseModel):
    """One divergence or distance estimate."""

    estimate: float = Field(description="Point estimate; may be negative for bias-corrected KL")
    stderr: float = Field(description="Standard error (bootstrap or per-sample)", ge=0.0)
    method: str = Field(default="", description="quadrature, knn, knn_two_sample, histogram, quantile, assignment")
    floor: float = Field(default=0.0, description="Noise floor of the estimator at this sample size", ge=0.0)
    flagged: bool = Field(default=False, description="Negative estimate or other estimator warning")
    n: int = Field(default=0, description="Number of sample rows", ge=0)
    notes: str = Field(default="")


class Check(BaseModel):
    """A measured lhs compared with a formula rhs."""

    name: str
    lhs: float = Field(description="Measured side")
    rhs: float = Field(description="Formula side")
    stderr: float = Field(default=0.0, description="Combined standard error of both sides", ge=0.0)
    allowance: float = Field(default=0.0, description="Extra allowance (noise floors) added to rhs", ge=0.0)
    passed: bool
    notes: str = Field(default="")

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, stderr: float = 0.0, allowance: float = 0.0,
                notes: str = "") -> "Check":
        """pass iff lhs <= rhs + allowance + 3 stderr."""
        return cls(name=name, lhs=float(lhs), rhs=float(rhs), stderr=float(stderr), allowance=float(allowance),
                   passed=bool(lhs <= rhs + allowance + SLACK * stderr), notes=notes)


class BiasFit(BaseModel):
    """Least-squares fit of log KL against log eta."""

    slope: float
    intercept: float
    r2: float
    n_points: int


class DiagnosticsReport(BaseModel):
    """Estimates and checks for one sample batch against one target."""

    potential: str
    n: int = Field(ge=0)
    d: int = Field(ge=1)
    kl: Optional[Estimate] = None
    tv: Optional[Estimate] = None
    w2: Optional[Estimate] = None
    checks: list[Check] = Field(default_factory=list)
    fisher_information: str = Field(default="not-estimated")
    notes: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> list[str]:
        return [check.name for check in self.checks if not check.passed]

    def rows(self) -> list[dict[str, object]]:
        """Rows for diagnostics.csv: one per estimate, then one per check."""
        rows: list[dict[str, object]] = []
        for quantity in ("kl", "tv", "w2"):
            est = getattr(self, quantity)
            if est is None:
                continue
            rows.append({"kind": "estimate", "name": quantity, "value": est.estimate, "stderr": est.stderr,
                         "rhs": "", "passed": "", "method": est.method, "flagged": est.flagged,
                         "notes": est.notes})
        for check in self.checks:
            rows.append({"kind": "check", "name": check.name, "value": check.lhs, "stderr": check.stderr,
                         "rhs": check.rhs + check.allowance, "passed": check.passed, "method": "",
                         "flagged": False, "notes": check.notes})
        return rows
