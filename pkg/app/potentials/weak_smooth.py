"""
Formula evaluators for (alpha, ell)-weak smoothness:

    ||grad U(x) - grad U(y)|| <= L (1 + ||x - y||^ell) ||x - y||^alpha,  alpha + ell <= 1.

No potential class is built on this condition; only its bounds are evaluated.
"""
import math

from app.errors import ParameterError


def _validate(alpha: float, ell: float, L: float) -> None:
    if not (0.0 <= alpha <= 1.0 and ell >= 0.0 and alpha + ell <= 1.0 and L > 0.0):
        raise ParameterError(f"Need 0 <= alpha, 0 <= ell, alpha + ell <= 1, L > 0; got alpha={alpha}, ell={ell}, L={L}")


def descent_bound(alpha: float, ell: float, L: float, step_norm: float) -> float:
    """L/(1+alpha) ||h||^(1+alpha) + L/(1+ell+alpha) ||h||^(1+ell+alpha)."""
    _validate(alpha, ell, L)
    return (L / (1.0 + alpha) * step_norm ** (1.0 + alpha)
            + L / (1.0 + ell + alpha) * step_norm ** (1.0 + ell + alpha))


def value_bound(alpha: float, ell: float, L: float, mu: float, d: int, p: float) -> float:
    """|U_mu - U| <= 2 L mu^(1+ell+alpha) d^((1+ell+alpha)/p)."""
    _validate(alpha, ell, L)
    s = 1.0 + ell + alpha
    return 2.0 * L * mu**s * d ** (s / p)


def grad_bound(alpha: float, ell: float, L: float, mu: float, d: int, p: float) -> float:
    """||grad U_mu - grad U|| <= L mu^alpha d^(1 + 1/p)."""
    _validate(alpha, ell, L)
    return L * mu**alpha * d ** (1.0 + 1.0 / p)


def lipschitz_bound(alpha: float, ell: float, L: float, mu: float, d: int, p: float) -> float:
    """Lipschitz constant of grad U_mu: (L / mu^(1-alpha)) d^(2/p)."""
    _validate(alpha, ell, L)
    return L / mu ** (1.0 - alpha) * d ** (2.0 / p)


def compute_D3_prime(alpha: float, ell: float, L: float, d: int) -> float:
    """D3' = 16 L^(2+2alpha+2ell) + 4 L^(2+2alpha) d^((3-alpha)(alpha+ell)/(1+alpha)) + 4 L^2 d^(alpha+ell)."""
    _validate(alpha, ell, L)
    return (16.0 * L ** (2.0 + 2.0 * alpha + 2.0 * ell)
            + 4.0 * L ** (2.0 + 2.0 * alpha) * d ** ((3.0 - alpha) * (alpha + ell) / (1.0 + alpha))
            + 4.0 * L**2 * d ** (alpha + ell))


def one_step_eta_cap(alpha: float, L: float, gamma: float) -> float:
    """Largest step for the one-step recursion: (gamma / (2 L^(1+alpha)))^(1/alpha)."""
    if alpha <= 0.0:
        raise ParameterError("alpha must be positive for the step-size cap")
    return (gamma / (2.0 * L ** (1.0 + alpha))) ** (1.0 / alpha)


def one_step_recursion(H_k: float, eta: float, gamma: float, alpha: float, D3_prime: float) -> float:
    """H_{k+1} <= exp(-gamma eta) H_k + 2 eta^(alpha+1) D3'."""
    return math.exp(-gamma * eta) * H_k + 2.0 * eta ** (alpha + 1.0) * D3_prime
