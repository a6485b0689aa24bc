"""Gamma distribution machinery, energy samplers and order-statistic limits.

Everything here is a pure function of its arguments. Randomness only enters
through an explicitly passed ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist

import numpy as np

__all__ = [
    "DomainError",
    "GammaParams",
    "gamma_cdf",
    "gamma_sf",
    "gamma_quantile",
    "gamma_median",
    "sample_gamma",
    "sample_energy_exact",
    "order_stat_limit_cdf",
    "scaling_constant",
    "gamma_tail_bound",
    "binomial_lower_tail_bound",
]

_EPS = sys.float_info.epsilon
_TINY = 1e-300
_MAX_TERMS = 1000
_STD_NORMAL = NormalDist()


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class GammaParams:
    """Gamma(shape, scale): sum of ``shape`` exponentials of mean ``scale``."""

    shape: int
    scale: float = 1.0

    def __post_init__(self):
        if isinstance(self.shape, bool) or int(self.shape) != self.shape or self.shape < 1:
            raise DomainError(f"shape must be a positive integer, got {self.shape!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"scale must be positive and finite, got {self.scale!r}")
        object.__setattr__(self, "shape", int(self.shape))
        object.__setattr__(self, "scale", float(self.scale))


# ---------------------------------------------------------------------------
# regularized incomplete gamma


def _series(a: float, x: float) -> float:
    # lower regularized P(a, x), valid for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _continued_fraction(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz, valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _regularized(a: float, x: float) -> tuple[float, float]:
    """Return (P(a, x), Q(a, x)), each computed on its accurate side."""
    if x <= 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < a + 1.0:
        p = _series(a, x)
        return p, 1.0 - p
    q = _continued_fraction(a, x)
    return 1.0 - q, q


def _check_x(x):
    if not x >= 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")


def gamma_cdf(x, params: GammaParams):
    """P(X <= x) for X ~ Gamma(shape, scale). Accepts a scalar or an array."""
    if np.ndim(x):
        arr = np.asarray(x, dtype=float)
        if np.any(~(arr >= 0)):
            raise DomainError("x must be nonnegative")
        out = np.empty_like(arr)
        flat = out.reshape(-1)
        for j, v in enumerate(arr.reshape(-1)):
            flat[j] = _regularized(params.shape, v / params.scale)[0]
        return out
    _check_x(x)
    return _regularized(params.shape, x / params.scale)[0]


def gamma_sf(x, params: GammaParams) -> float:
    """P(X > x); accurate in the upper tail where ``1 - gamma_cdf`` is not."""
    _check_x(x)
    return _regularized(params.shape, x / params.scale)[1]


def _log_pdf_unit(a: float, x: float) -> float:
    return (a - 1.0) * math.log(x) - x - math.lgamma(a)


def _initial_guess(a: float, q: float) -> float:
    # Wilson-Hilferty cube-root normal approximation
    z = _STD_NORMAL.inv_cdf(q)
    c = 1.0 / (9.0 * a)
    x = a * (1.0 - c + z * math.sqrt(c)) ** 3
    if x <= 0.0:
        # lower tail of small shapes: P(a, x) ~ x^a / Gamma(a + 1)
        x = math.exp((math.log(q) + math.lgamma(a + 1.0)) / a)
    return x


def _quantile_unit(a: float, q: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    # Work on the smaller tail so the tolerance is relative to it.
    upper = q > 0.5
    target = 1.0 - q if upper else q

    def resid(x: float) -> float:
        p, qq = _regularized(a, x)
        return (qq - target) if upper else (p - target)

    lo, hi = 0.0, max(1.0, _initial_guess(a, q))
    # bracket: resid is increasing in x for the lower tail, decreasing for the upper
    sign = -1.0 if upper else 1.0
    while sign * resid(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    x = min(max(_initial_guess(a, q), lo), hi)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)

    for _ in range(max_iter):
        r = resid(x)
        if abs(r) <= tol * target:
            return x
        if sign * r < 0.0:
            lo = x
        else:
            hi = x
        step_ok = False
        if x > 0.0:
            dens = math.exp(_log_pdf_unit(a, x))
            if dens > 0.0:
                newton = x - sign * r / dens
                if lo < newton < hi:
                    x_new, step_ok = newton, True
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= _EPS * hi:
            return x_new
        x = x_new
    return x


def gamma_quantile(q: float, params: GammaParams) -> float:
    """Inverse of :func:`gamma_cdf`.

    Bracketed Newton on the regularized incomplete gamma, falling back to
    bisection whenever the Newton step leaves the bracket.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    return params.scale * _quantile_unit(float(params.shape), float(q))


@lru_cache(maxsize=256)
def gamma_median(shape: int) -> float:
    """Median of Gamma(shape, 1); the exploration threshold before scaling."""
    return gamma_quantile(0.5, GammaParams(shape, 1.0))


# ---------------------------------------------------------------------------
# sampling


def sample_gamma(params: GammaParams, rng: np.random.Generator, size=None):
    """Draw Gamma(shape, scale) as a sum of ``shape`` exponentials.

    Each draw consumes exactly ``shape`` uniforms from ``rng`` (``-log(1-U)``
    per exponential), so stream consumption is ``shape * prod(size)``.
    """
    n = 1 if size is None else int(np.prod(size))
    u = rng.random((n, params.shape))
    draws = -np.log1p(-u).sum(axis=1) * params.scale
    if size is None:
        return float(draws[0])
    return draws.reshape(size)


def _box_muller_energy(u: np.ndarray, variance) -> np.ndarray:
    # u has trailing axes (count, 2); returns sum_j |x_j|^2
    radius = np.sqrt(-2.0 * np.log1p(-u[..., 0]))
    angle = 2.0 * np.pi * u[..., 1]
    sd = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    sd = sd.reshape(sd.shape + (1,) * (u.ndim - 1 - sd.ndim)) if sd.ndim else sd
    re = sd * radius * np.cos(angle)
    im = sd * radius * np.sin(angle)
    return (re * re + im * im).sum(axis=-1)


def sample_energy_exact(count: int, variance: float, rng: np.random.Generator, size=None):
    """Squared norm of ``count`` circular complex normals CN(0, variance).

    Real and imaginary parts come from Box-Muller with variance/2 each; every
    energy draw consumes ``2 * count`` uniforms.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    if not variance > 0:
        raise DomainError("variance must be positive")
    n = 1 if size is None else int(np.prod(size))
    u = rng.random((n, count, 2))
    energy = _box_muller_energy(u, variance)
    if size is None:
        return float(energy[0])
    return energy.reshape(size)


# ---------------------------------------------------------------------------
# order statistics and bounds


def order_stat_limit_cdf(w: float, rank: int, shape: int) -> float:
    """Limit CDF of the ``rank``-th smallest of m Gamma(shape) draws scaled by b_m.

    1 - exp(-w^M) * sum_{k<rank} w^(kM) / k!, evaluated in log space.
    """
    if rank < 1 or shape < 1:
        raise DomainError("rank and shape must be >= 1")
    if not w >= 0:
        raise DomainError("w must be nonnegative")
    if w == 0:
        return 0.0
    if math.isinf(w):
        return 1.0
    s = w**shape
    log_s = shape * math.log(w)
    tail = 0.0
    for k in range(rank):
        tail += math.exp(-s + k * log_s - math.lgamma(k + 1))
    return max(0.0, 1.0 - tail)


def scaling_constant(m: int, params: GammaParams) -> float:
    """b_m = scale * (M! / m)^(1/M), the order-statistic normalizer."""
    if m < 1:
        raise DomainError("m must be >= 1")
    M = params.shape
    return params.scale * math.exp((math.lgamma(M + 1) - math.log(m)) / M)


def gamma_tail_bound(threshold: float, params: GammaParams) -> float:
    """1 - exp(-threshold/scale), the single-sample retention probability.

    Equals P(X < threshold) when shape is 1, which is how exploration uses it
    (one sample per channel per cycle). For shape > 1 the Gamma law dominates
    the exponential, so the value bounds the CDF from above instead.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    return -math.expm1(-threshold / params.scale)


def binomial_lower_tail_bound(m: int, a: float, b: float) -> float:
    """Chernoff-type upper bound on P(Binomial(m, a) <= b), for 0 < b < m a."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if not 0.0 < a < 1.0:
        raise DomainError("a must lie in (0, 1)")
    if not 0.0 < b < m * a:
        raise DomainError("bound needs 0 < b < m*a")
    log_bound = (m - b) * math.log((m - m * a) / (m - b)) + b * math.log(m * a / b)
    return min(1.0, math.exp(log_bound))
