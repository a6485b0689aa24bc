"""Closed-form asymptotic error probabilities, budget relations and bounds.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .stats_core import DomainError


def _check(gamma: float, epsilon: float, T: int):
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    if T < 1:
        raise DomainError("T must be >= 1")


def _error_from_log_ratio(log_x: float, T: int) -> float:
    # 1 - (1 + 1/x)^-T  ==  -expm1(-T * log1p(exp(-log x)))
    if log_x < -700.0:
        return 1.0
    return -math.expm1(-T * math.log1p(math.exp(-log_x)))


def p_na_asymptotic(gamma: float, M: float, epsilon: float, T: int) -> float:
    """Non-adaptive robust detector error, 1 - (1 + [(1+gamma)^M eps]^-1)^-T."""
    _check(gamma, epsilon, T)
    if M < 1:
        raise DomainError("M must be >= 1")
    return _error_from_log_ratio(M * math.log1p(gamma) + math.log(epsilon), T)


def p_a_asymptotic(gamma: float, M_detect: float, K: int, epsilon: float, T: int) -> float:
    """Adaptive error: the non-adaptive form with eps boosted by 2^K and M -> M_detect."""
    _check(gamma, epsilon, T)
    if K < 0:
        raise DomainError("K must be >= 0")
    if not M_detect > 0:
        raise DomainError("M_detect must be positive")
    log_x = M_detect * math.log1p(gamma) + K * math.log(2.0) + math.log(epsilon)
    return _error_from_log_ratio(log_x, T)


def detection_allocation_asymptotic(M: float, K: int, gamma: float) -> float:
    """Detection-phase samples per channel matching non-adaptive reliability: M - K/log(1+gamma)."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    return M - K / math.log1p(gamma)


def agility_gain_lower_bound(M: float, K: int) -> float:
    if M < 1 or K < 0:
        raise DomainError("need M >= 1 and K >= 0")
    return 1.0 / (2.0**-K + 2.0 / M)


def m_prime(M: int, K: int) -> int:
    """Detection samples per survivor when an M*n budget is explored with one sample per cycle."""
    if M < 1 or K < 0:
        raise DomainError("need M >= 1 and K >= 0")
    return 2**K * (M - 2) + 2


def power_scaling_boundaries(alpha: float, M: int, K: int) -> tuple[float, float]:
    """(beta_na, beta_a): minimal power exponents for eps = n^(alpha-1), gamma = n^beta."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    return (1.0 - alpha) / M, (1.0 - alpha) / m_prime(M, K)


def optimal_cycles(epsilon: float) -> float:
    """K* = log log (1/eps); needs eps < 1/e."""
    if not 0.0 < epsilon < math.exp(-1.0):
        raise DomainError("epsilon must lie in (0, 1/e)")
    return math.log(-math.log(epsilon))


@dataclass(frozen=True)
class TheoryPoint:
    p_na: float
    p_a: float
    agility_gain_lb: float
    m_prime: int
    k_star: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def theory_point(M: int, K: int, gamma: float, epsilon: float, T: int = 2) -> TheoryPoint:
    """All closed-form predictions for one configuration with an M*n budget.

    The adaptive error uses ``m_prime(M, K)`` detection samples, the allocation
    left over when each exploration cycle halves the occupied channels.
    """
    mp = m_prime(M, K)
    return TheoryPoint(
        p_na=p_na_asymptotic(gamma, M, epsilon, T),
        p_a=p_a_asymptotic(gamma, max(mp, 1), K, epsilon, T),
        agility_gain_lb=agility_gain_lower_bound(M, K),
        m_prime=mp,
        k_star=optimal_cycles(epsilon) if epsilon < math.exp(-1.0) else None,
    )


def p_na_exact(n: int, epsilon: float, gamma: float, M: int, T: int = 2) -> float:
    """Finite-n error of the non-adaptive robust detector under worst-case powers.

    Conditions on the hole count n0 ~ Binomial(n, eps) and integrates the
    density of the T-th smallest hole energy against the probability that all
    n - n0 occupied energies exceed it. Fewer than T holes is an error.
    """
    from scipy import integrate, stats

    _check(gamma, epsilon, T)
    holes = stats.gamma(M)
    occupied = stats.gamma(M, scale=1.0 + gamma)
    lo, hi = (int(v) for v in stats.binom.interval(1.0 - 1e-13, n, epsilon))
    upper = holes.isf(1e-16) * 2.0
    success = 0.0
    for n0 in range(max(lo, T), min(hi, n) + 1):
        n1 = n - n0

        def integrand(y, n0=n0, n1=n1):
            return (
                stats.beta.pdf(holes.cdf(y), T, n0 - T + 1)
                * holes.pdf(y)
                * math.exp(n1 * occupied.logsf(y))
            )

        value, _ = integrate.quad(integrand, 0.0, upper, limit=400, epsabs=1e-12)
        success += stats.binom.pmf(n0, n, epsilon) * value
    return 1.0 - success
