"""
The p-generalized Gaussian N_p(0, I_d): sampling, normalizer and norm moments.

Each coordinate has density proportional to exp(-|t|^p / p). With
G ~ Gamma(1/p, 1) the magnitude is |t| = (p G)^(1/p) and the sign is a fair
coin, which gives an exact sampler for every p in [1, 2].
"""
import logging
import math

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from scipy.special import gammaln

from app.errors import OutOfRangeError, ParameterError

logger = logging.getLogger(__name__)

# exp() overflows past this
_MAX_LOG = math.log(np.finfo(float).max)


class PGaussParams(BaseModel):
    """Shape and dimension of N_p(0, I_d)."""

    model_config = {"frozen": True}

    p: float = Field(description="Shape exponent, 1 <= p <= 2", ge=1.0, le=2.0)
    d: int = Field(description="Dimension", ge=1)


def make_params(p: float, d: int) -> PGaussParams:
    """Validate (p, d) and raise ParameterError instead of a pydantic error."""
    try:
        return PGaussParams(p=p, d=d)
    except ValidationError as e:
        raise ParameterError(f"Invalid p-generalized Gaussian parameters p={p}, d={d}: {e}") from e


def sample(params: PGaussParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """
    Draw an n x d batch of i.i.d. N_p(0, I_d) vectors.

    Args:
        params: Shape and dimension
        rng: Seeded generator
        n: Number of rows

    Returns:
        Array of shape (n, d)
    """
    if n < 1:
        raise ParameterError(f"Sample count must be >= 1, got {n}")
    p = params.p
    shape = (int(n), params.d)
    if p == 2.0:
        return rng.standard_normal(shape)
    # numpy's gamma handles shape < 1 by boosting the shape and rescaling
    g = rng.gamma(1.0 / p, 1.0, size=shape)
    magnitude = (p * g) ** (1.0 / p)
    sign = 2.0 * rng.integers(0, 2, size=shape) - 1.0
    return sign * magnitude


def log_normalizer(params: PGaussParams) -> float:
    """log kappa = d log 2 + d log Gamma(1/p) - (d - d/p) log p."""
    p, d = params.p, params.d
    return d * math.log(2.0) + d * float(gammaln(1.0 / p)) - (d - d / p) * math.log(p)


def normalizer(params: PGaussParams) -> float:
    """
    kappa = 2^d Gamma(1/p)^d / p^(d - d/p), the integral of exp(-||x||_p^p / p).

    Raises:
        OutOfRangeError: kappa does not fit in a float; use log_normalizer
    """
    log_kappa = log_normalizer(params)
    if log_kappa > _MAX_LOG:
        raise OutOfRangeError(
            f"Normalizer overflows for p={params.p}, d={params.d} (log kappa = {log_kappa:.3f})"
        )
    return math.exp(log_kappa)


def log_density(params: PGaussParams, x: np.ndarray) -> np.ndarray:
    """Log density at the rows of x (shape (..., d))."""
    x = np.asarray(x, dtype=float)
    return -np.sum(np.abs(x) ** params.p, axis=-1) / params.p - log_normalizer(params)


def norm_moment(params: PGaussParams, n: float) -> float:
    """
    E ||xi||_p^n = p^(n/p) Gamma((d+n)/p) / Gamma(d/p).

    Args:
        params: Shape and dimension
        n: Non-negative moment order

    Returns:
        The moment
    """
    if n < 0:
        raise ParameterError(f"Moment order must be >= 0, got {n}")
    p, d = params.p, params.d
    log_value = (n / p) * math.log(p) + float(gammaln((d + n) / p)) - float(gammaln(d / p))
    return math.exp(log_value)


def norm_moment_sandwich(params: PGaussParams, n: float) -> tuple[float, float]:
    """
    Bracket d^floor(n/p) <= E ||xi||_p^n <= (d + n/2)^(n/p).

    The lower side only holds for n >= p (at d=1, p=2, n=1 the moment is
    0.798); below that the lower end is reported as 0.
    """
    p, d = params.p, params.d
    lower = float(d) ** math.floor(n / p) if n >= p else 0.0
    return lower, (d + n / 2.0) ** (n / p)


def coordinate_variance(p: float) -> float:
    """Var of one coordinate: p^(2/p) Gamma(3/p) / Gamma(1/p)."""
    return math.exp((2.0 / p) * math.log(p) + float(gammaln(3.0 / p)) - float(gammaln(1.0 / p)))


def p_norm(x: np.ndarray, p: float) -> np.ndarray:
    """||x||_p along the last axis."""
    return np.sum(np.abs(np.asarray(x, dtype=float)) ** p, axis=-1) ** (1.0 / p)
