import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from adaptsense.stats_core import (
    DomainError,
    GammaParams,
    binomial_lower_tail_bound,
    gamma_cdf,
    gamma_median,
    gamma_quantile,
    gamma_sf,
    gamma_tail_bound,
    order_stat_limit_cdf,
    sample_energy_exact,
    sample_gamma,
    scaling_constant,
)

# Medians frozen from a 40-digit mpmath bisection on the integer-shape
# Poisson-sum form P(a, x) = 1 - exp(-x) sum_{k<a} x^k / k!.
MEDIAN_SHAPE2 = 1.6783469900166607
MEDIAN_SHAPE5 = 4.6709088827959837


def poisson_sum_cdf(a, x):
    return 1.0 - math.exp(-x) * sum(x**k / math.factorial(k) for k in range(a))


def test_gamma_params_validation():
    with pytest.raises(DomainError):
        GammaParams(0)
    with pytest.raises(DomainError):
        GammaParams(2.5)
    with pytest.raises(DomainError):
        GammaParams(3, 0.0)


def test_gamma_cdf_examples():
    assert gamma_cdf(math.log(2), GammaParams(1)) == pytest.approx(0.5, abs=1e-15)
    assert gamma_cdf(0.0, GammaParams(7, 3.0)) == 0.0
    assert gamma_cdf(MEDIAN_SHAPE5, GammaParams(5)) == pytest.approx(0.5, abs=1e-12)
    assert gamma_cdf(4.670909, GammaParams(5)) == pytest.approx(0.5, abs=1e-6)


def test_gamma_cdf_domain():
    with pytest.raises(DomainError):
        gamma_cdf(-1.0, GammaParams(2))
    with pytest.raises(DomainError):
        gamma_cdf(np.array([1.0, -0.1]), GammaParams(2))


@pytest.mark.parametrize("shape", [1, 2, 5, 17, 64])
def test_gamma_cdf_matches_poisson_sum(shape):
    for x in np.linspace(0.05, 3 * shape + 20, 40):
        assert gamma_cdf(float(x), GammaParams(shape)) == pytest.approx(
            poisson_sum_cdf(shape, float(x)), abs=1e-12
        )


def test_gamma_cdf_against_scipy_both_branches():
    for a in (1, 3, 10, 40):
        for x in np.geomspace(1e-3, 200, 60):
            p = GammaParams(a, 2.0)
            assert gamma_cdf(float(x), p) == pytest.approx(special.gammainc(a, x / 2.0), abs=1e-13)
            assert gamma_sf(float(x), p) == pytest.approx(special.gammaincc(a, x / 2.0), rel=1e-10, abs=1e-300)


def test_gamma_cdf_vectorized_and_limits():
    xs = np.array([0.0, 1.0, 5.0, 1e3])
    out = gamma_cdf(xs, GammaParams(3))
    assert out.shape == xs.shape
    assert out[0] == 0.0 and out[-1] == 1.0
    assert np.all(np.diff(out) >= 0)


def test_gamma_quantile_examples():
    assert gamma_quantile(0.5, GammaParams(1)) == pytest.approx(math.log(2), abs=1e-14)
    assert gamma_quantile(0.5, GammaParams(1, 2.0)) == pytest.approx(2 * math.log(2), abs=1e-14)
    assert gamma_quantile(0.5, GammaParams(5)) == pytest.approx(4.670909, abs=1e-6)
    for q in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            gamma_quantile(q, GammaParams(2))


def test_gamma_median_examples():
    assert gamma_median(1) == pytest.approx(math.log(2), abs=1e-12)
    assert gamma_median(2) == pytest.approx(MEDIAN_SHAPE2, abs=1e-12)
    assert gamma_median(5) == pytest.approx(MEDIAN_SHAPE5, abs=1e-12)
    with pytest.raises(DomainError):
        gamma_median(0)


def test_quantile_round_trip_grid():
    qs = special.expit(np.linspace(special.logit(1e-6), special.logit(1 - 1e-6), 50))
    worst = 0.0
    for shape in range(1, 65):
        p = GammaParams(shape)
        for q in qs:
            worst = max(worst, abs(gamma_cdf(gamma_quantile(float(q), p), p) - q))
    assert worst <= 1e-10


@given(
    st.integers(1, 64),
    st.floats(1e-6, 1 - 1e-6),
    st.floats(0.01, 100.0),
)
@settings(max_examples=200, deadline=None)
def test_quantile_scale_equivariance(shape, q, scale):
    base = gamma_quantile(q, GammaParams(shape))
    assert gamma_quantile(q, GammaParams(shape, scale)) == pytest.approx(scale * base, rel=1e-12)


@given(st.integers(1, 40), st.floats(1e-5, 1 - 1e-5), st.floats(1e-5, 1 - 1e-5))
@settings(max_examples=100, deadline=None)
def test_quantile_strictly_increasing(shape, q1, q2):
    if abs(q1 - q2) < 1e-9:
        return
    lo, hi = sorted((q1, q2))
    p = GammaParams(shape)
    assert gamma_quantile(lo, p) < gamma_quantile(hi, p)


def test_sample_gamma_moments_and_determinism():
    p = GammaParams(5)
    draws = sample_gamma(p, np.random.default_rng(11), size=100_000)
    assert draws.mean() == pytest.approx(5.0, abs=0.05)
    assert draws.var() == pytest.approx(5.0, abs=0.2)
    again = sample_gamma(p, np.random.default_rng(11), size=100_000)
    assert np.array_equal(draws, again)
    assert isinstance(sample_gamma(p, np.random.default_rng(1)), float)


def test_sample_gamma_rng_consumption():
    # exactly shape uniforms per draw
    rng = np.random.default_rng(3)
    sample_gamma(GammaParams(4), rng, size=10)
    ref = np.random.default_rng(3)
    ref.random(40)
    assert rng.random() == ref.random()


def test_sample_gamma_ks_against_own_cdf():
    p = GammaParams(5)
    draws = sample_gamma(p, np.random.default_rng(12), size=100_000)
    d = stats.kstest(draws, lambda x: gamma_cdf(np.maximum(x, 0.0), p)).statistic
    assert d < 0.01


def test_sample_energy_exact_exponential_and_mean():
    rng = np.random.default_rng(21)
    e = sample_energy_exact(1, 1.0, rng, size=100_000)
    assert stats.kstest(e, "expon").statistic < 0.01
    e5 = sample_energy_exact(5, 3.0, rng, size=100_000)
    assert e5.mean() == pytest.approx(15.0, abs=0.15)
    with pytest.raises(DomainError):
        sample_energy_exact(0, 1.0, rng)
    with pytest.raises(DomainError):
        sample_energy_exact(2, 0.0, rng)


def test_sample_energy_exact_matches_gamma_path():
    a = sample_energy_exact(5, 1.0, np.random.default_rng(31), size=100_000)
    b = sample_gamma(GammaParams(5), np.random.default_rng(32), size=100_000)
    assert stats.ks_2samp(a, b).statistic < 0.015


def test_order_stat_limit_cdf_examples():
    assert order_stat_limit_cdf(0.0, 3, 4) == 0.0
    assert order_stat_limit_cdf(1.0, 1, 1) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert order_stat_limit_cdf(1.0, 2, 2) == pytest.approx(0.264241117657115, abs=1e-12)
    with pytest.raises(DomainError):
        order_stat_limit_cdf(-1.0, 1, 1)
    with pytest.raises(DomainError):
        order_stat_limit_cdf(1.0, 0, 1)


@pytest.mark.parametrize("shape", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("rank", [1, 2, 3, 4, 5])
def test_order_stat_limit_cdf_is_a_cdf(rank, shape):
    w = np.linspace(0, 10, 2001)
    vals = np.array([order_stat_limit_cdf(float(x), rank, shape) for x in w])
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= -1e-15)
    if shape >= 2:
        assert vals[-1] >= 1 - 1e-9
    else:
        # w^M = 10 only: the Poisson tail exp(-10) sum_{k<rank} 10^k/k! remains
        assert vals[-1] == pytest.approx(stats.poisson.sf(rank - 1, 10.0), abs=1e-12)
    # same law as a Gamma(rank, 1) CDF evaluated at w^M
    assert np.allclose(vals, special.gammainc(rank, w**shape), atol=1e-12)


def _exact_order_stat_cdf(w, rank, shape, m):
    # P(at least rank of m draws fall below b_m * w)
    b = scaling_constant(m, GammaParams(shape))
    F = special.gammainc(shape, b * w)
    return stats.binom.sf(rank - 1, m, F)


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_order_stat_empirical_against_finite_m_law(rank):
    # Scaled order statistics from our sampler follow the exact finite-m law.
    shape, m, reps = 3, 2000, 2000
    rng = np.random.default_rng(100 + rank)
    b = scaling_constant(m, GammaParams(shape))
    w = np.empty(reps)
    for r in range(reps):
        y = sample_gamma(GammaParams(shape), rng, size=m)
        w[r] = np.partition(y, rank - 1)[rank - 1] / b
    d = stats.kstest(w, lambda x: _exact_order_stat_cdf(x, rank, shape, m)).statistic
    assert d < 1.63 / math.sqrt(reps)  # 1% KS critical value


def test_order_stat_limit_exact_for_unit_shape():
    # shape 1: finite-m law is within 1e-4 of the limit at m = 1e5
    w = np.linspace(0.01, 4, 200)
    for rank in (1, 2, 3):
        exact = _exact_order_stat_cdf(w, rank, 1, 100_000)
        limit = np.array([order_stat_limit_cdf(float(x), rank, 1) for x in w])
        assert np.max(np.abs(exact - limit)) < 1e-4


def test_scaling_constant_examples():
    assert scaling_constant(1, GammaParams(1)) == pytest.approx(1.0)
    assert scaling_constant(120, GammaParams(5)) == pytest.approx(1.0)
    assert scaling_constant(1000, GammaParams(2, 3.0)) == pytest.approx(0.13416407864998739, rel=1e-12)
    with pytest.raises(DomainError):
        scaling_constant(0, GammaParams(1))


def test_gamma_tail_bound_examples():
    assert gamma_tail_bound(2.5, GammaParams(4, 2.5)) == pytest.approx(1 - math.exp(-1))
    for t in (0.1, 1.0, 3.0):
        assert gamma_tail_bound(t, GammaParams(1)) == pytest.approx(gamma_cdf(t, GammaParams(1)), rel=1e-12)
    # Gamma(5) dominates Exp(1): the exponential form sits above the CDF
    assert gamma_cdf(10.0, GammaParams(5)) == pytest.approx(0.9707473119230389, rel=1e-12)
    assert gamma_tail_bound(10.0, GammaParams(5)) > gamma_cdf(10.0, GammaParams(5))
    with pytest.raises(DomainError):
        gamma_tail_bound(0.0, GammaParams(1))


@given(st.floats(0.05, 20.0), st.floats(0.01, 100.0))
@settings(max_examples=200, deadline=None)
def test_gamma_tail_bound_is_exact_for_single_sample(scale, threshold):
    p = GammaParams(1, scale)
    assert gamma_tail_bound(threshold, p) == pytest.approx(gamma_cdf(threshold, p), rel=1e-12, abs=1e-300)


@given(st.integers(2, 30), st.floats(0.05, 20.0), st.floats(0.01, 100.0))
@settings(max_examples=200, deadline=None)
def test_gamma_tail_bound_dominates_cdf_for_larger_shapes(shape, scale, threshold):
    p = GammaParams(shape, scale)
    assert gamma_tail_bound(threshold, p) >= gamma_cdf(threshold, p) - 1e-15


def test_binomial_bound_examples():
    exact = stats.binom.cdf(30, 100, 0.5)
    assert exact == pytest.approx(3.925069822796835e-05, rel=1e-9)
    assert binomial_lower_tail_bound(100, 0.5, 30) >= exact
    assert binomial_lower_tail_bound(10, 0.9, 5) >= stats.binom.cdf(5, 10, 0.9)
    assert binomial_lower_tail_bound(100, 0.5, 50 - 1e-9) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        binomial_lower_tail_bound(100, 0.5, 50)
    with pytest.raises(DomainError):
        binomial_lower_tail_bound(100, 1.0, 5)


def _binom_cdf_sum(m, a, b):
    k = np.arange(0, math.floor(b) + 1)
    return float(np.exp(special.gammaln(m + 1) - special.gammaln(k + 1) - special.gammaln(m - k + 1)
                        + k * np.log(a) + (m - k) * np.log1p(-a)).sum())


@given(st.integers(1, 1000), st.floats(0.01, 0.99), st.floats(0.01, 0.999))
@settings(max_examples=300, deadline=None)
def test_binomial_bound_dominates_exact_sum(m, a, frac):
    b = frac * m * a
    if b <= 0:
        return
    assert binomial_lower_tail_bound(m, a, b) >= _binom_cdf_sum(m, a, b) * (1 - 1e-9)
