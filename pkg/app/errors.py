"""
Exception hierarchy shared by every package.

Each class carries the process exit code used by the command line.
"""
from typing import Optional, Sequence


class SamplingError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ParameterError(SamplingError, ValueError):
    """Invalid numeric parameter (p outside [1, 2], d < 1, non-positive variance...)."""

    exit_code = 2


class OutOfRangeError(ParameterError):
    """A closed-form value overflows the float range; use the log-domain variant."""


class ConfigurationError(SamplingError):
    """Missing declaration or unusable configuration."""

    exit_code = 2


class DomainError(SamplingError, ValueError):
    """Evaluation requested outside the supported domain."""

    exit_code = 2


class InsufficientSamplesError(SamplingError, ValueError):
    """Too few sample rows for an estimator."""

    exit_code = 2


class RegimeError(SamplingError):
    """Planner or construction called outside its theorem's hypotheses."""

    exit_code = 3


class ChainDivergenceError(SamplingError):
    """A chain produced a non-finite drift or left the 1e8 ball."""

    exit_code = 4

    def __init__(self, message: str, chain_id: int = 0, step: int = 0,
                 position: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.chain_id = chain_id
        self.step = step
        self.position = None if position is None else [float(v) for v in position]

    def __str__(self) -> str:
        base = super().__str__()
        return f"{base} (chain {self.chain_id}, step {self.step}, position {self.position})"


class CheckFailure(SamplingError):
    """One or more verification checks failed."""

    exit_code = 5

    def __init__(self, message: str, failed: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.failed = list(failed or [])
