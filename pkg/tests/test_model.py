import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcnsim.model import (
    Bimodal,
    Degenerate,
    ImpossibleEvent,
    IntervalUniform,
    Mixed,
    NormalTruncated,
    Uniform,
    channel_failure_prob,
    channel_success_prob,
    condition_on_failure,
    condition_on_success,
    entropy,
    masses,
    sample_balance,
)

# ---------------------------------------------------------------------------
# Strategies covering every distribution variant at oracle-checkable sizes.
# ---------------------------------------------------------------------------

capacities = st.integers(min_value=1, max_value=200)


@st.composite
def distributions(draw, max_capacity=200):
    c = draw(st.integers(min_value=1, max_value=max_capacity))
    kind = draw(st.sampled_from(["uniform", "bimodal", "normal", "mixed", "known", "interval"]))
    if kind == "uniform":
        return Uniform(c)
    if kind == "bimodal":
        return Bimodal(c, draw(st.floats(min_value=0.0, max_value=1.0)))
    if kind == "normal":
        mean = draw(st.floats(min_value=-0.5 * c, max_value=1.5 * c))
        stddev = draw(st.floats(min_value=0.05 * c, max_value=c))
        return NormalTruncated(c, mean=mean, stddev=stddev)
    if kind == "mixed":
        return Mixed(c, draw(st.floats(min_value=0.0, max_value=1.0)))
    if kind == "known":
        return Degenerate(c, draw(st.integers(min_value=0, max_value=c)))
    lo = draw(st.integers(min_value=0, max_value=c))
    hi = draw(st.integers(min_value=lo, max_value=c))
    return IntervalUniform(c, lo, hi)


def brute_force_condition(dist, lo, hi):
    """Oracle: renormalize the explicit mass vector over the interval."""
    m = masses(dist)
    out = np.zeros_like(m)
    out[lo : hi + 1] = m[lo : hi + 1]
    total = out.sum()
    if total <= 0:
        return None
    return out / total


# ---------------------------------------------------------------------------
# Spec examples.
# ---------------------------------------------------------------------------


def test_uniform_failure_prob_example():
    assert channel_failure_prob(Uniform(100), 10) == pytest.approx(10 / 101, abs=1e-15)


def test_failure_prob_at_zero_amount_is_zero():
    for dist in [Uniform(100), Bimodal(50), Degenerate(10, 3), Mixed(20, 0.4)]:
        assert channel_failure_prob(dist, 0) == 0.0


def test_degenerate_failure_prob_threshold():
    d = Degenerate(100, 50)
    assert channel_failure_prob(d, 51) == 1.0
    assert channel_failure_prob(d, 50) == 0.0


def test_uniform_success_prob_example():
    assert channel_success_prob(Uniform(100), 10) == pytest.approx(91 / 101, abs=1e-15)


def test_success_prob_at_zero_amount_is_one():
    for dist in [Uniform(100), Bimodal(50), NormalTruncated(60, 30, 6)]:
        assert channel_success_prob(dist, 0) == 1.0


def test_mixed_fully_bimodal_success_is_half():
    assert channel_success_prob(Mixed(100, p_bimodal=1.0), 50) == pytest.approx(0.5, abs=1e-12)


def test_condition_on_failure_uniform_gives_interval():
    post = condition_on_failure(Uniform(100), 40)
    assert post == IntervalUniform(100, 0, 39)
    assert post.pmf(5) == pytest.approx(1 / 40, abs=1e-15)


def test_condition_on_failure_already_certain_is_unchanged():
    prior = IntervalUniform(100, 0, 39)
    assert condition_on_failure(prior, 40) is prior


def test_condition_on_failure_impossible():
    with pytest.raises(ImpossibleEvent):
        condition_on_failure(Degenerate(100, 50), 40)


def test_condition_on_success_uniform():
    assert condition_on_success(Uniform(100), 40) == IntervalUniform(100, 40, 100)


def test_condition_on_success_at_zero_unchanged():
    prior = Uniform(100)
    assert condition_on_success(prior, 0) is prior


def test_condition_on_success_interval():
    post = condition_on_success(IntervalUniform(100, 10, 20), 15)
    oracle = brute_force_condition(IntervalUniform(100, 10, 20), 15, 100)
    assert post == IntervalUniform(100, 15, 20)
    assert np.max(np.abs(masses(post) - oracle)) < 1e-12


def test_degenerate_sampling(rng):
    d = Degenerate(100, 50)
    assert all(sample_balance(d, rng) == 50 for _ in range(100))


def test_uniform_sampling_moments(rng):
    c, n = 100, 10**6
    samples = np.array([Uniform(c).sample(rng) for _ in range(n)])
    sigma_mean = math.sqrt(((c + 1) ** 2 - 1) / 12 / n)
    assert abs(samples.mean() - c / 2) < 3 * sigma_mean
    p = 10 / 101
    sigma_p = math.sqrt(p * (1 - p) / n)
    assert abs(np.mean(samples < 10) - p) < 3 * sigma_p


def test_bimodal_sampling_support(rng):
    vals = {Bimodal(100, 0.5).sample(rng) for _ in range(10**4)}
    assert vals == {0, 100}


def test_entropy_examples():
    assert entropy(Uniform(100)) == pytest.approx(math.log(101), abs=1e-12)
    assert entropy(Degenerate(100, 42)) == 0.0
    assert entropy(IntervalUniform(100, 0, 39)) == pytest.approx(math.log(40), abs=1e-12)


def test_entropy_uniform_exact_across_sizes():
    for c in [1, 10, 100, 10**6]:
        assert entropy(Uniform(c)) == pytest.approx(math.log(c + 1), abs=1e-12)


# ---------------------------------------------------------------------------
# Invariants and properties.
# ---------------------------------------------------------------------------


@given(distributions(), st.integers(min_value=0, max_value=250), st.integers(min_value=0, max_value=250))
def test_failure_prob_monotone(dist, a1, a2):
    a1, a2 = min(a1, a2), max(a1, a2)
    assert channel_failure_prob(dist, a1) <= channel_failure_prob(dist, a2) + 1e-15


@given(distributions(), st.integers(min_value=0, max_value=250))
def test_success_failure_complement(dist, a):
    s = channel_success_prob(dist, a)
    f = channel_failure_prob(dist, a)
    assert abs(s + f - 1.0) < 1e-12
    assert -1e-12 <= s <= 1 + 1e-12 and -1e-12 <= f <= 1 + 1e-12


@given(distributions())
def test_mass_sums_to_one(dist):
    assert abs(masses(dist).sum() - 1.0) < 1e-12


@given(distributions(), st.integers(min_value=1, max_value=200))
def test_condition_on_failure_matches_brute_force(dist, a):
    oracle = brute_force_condition(dist, 0, a - 1)
    if oracle is None or channel_failure_prob(dist, a) <= 0:
        with pytest.raises(ImpossibleEvent):
            condition_on_failure(dist, a)
        return
    post = condition_on_failure(dist, a)
    assert np.max(np.abs(masses(post) - oracle)) <= 1e-12


@given(distributions(), st.integers(min_value=0, max_value=200))
def test_condition_on_success_matches_brute_force(dist, a):
    oracle = brute_force_condition(dist, min(a, dist.capacity + 1), dist.capacity)
    if oracle is None or channel_success_prob(dist, a) <= 0:
        with pytest.raises(ImpossibleEvent):
            condition_on_success(dist, a)
        return
    post = condition_on_success(dist, a)
    assert np.max(np.abs(masses(post) - oracle)) <= 1e-12


@given(
    st.integers(min_value=2, max_value=200),
    st.data(),
)
def test_chained_conditioning_support(c, data):
    a2 = data.draw(st.integers(min_value=2, max_value=c))
    a1 = data.draw(st.integers(min_value=1, max_value=a2 - 1))
    post = condition_on_failure(Uniform(c), a2)
    post = condition_on_success(post, a1)
    assert post.support() == (a1, a2 - 1)


def test_sampling_matches_cdf_kolmogorov_smirnov(rng):
    # 1% critical value for the one-sample KS statistic at n samples.
    n = 10**5
    critical = 1.628 / math.sqrt(n)
    cases = [
        Uniform(1000),
        Bimodal(500, 0.3),
        NormalTruncated(400, mean=200.0, stddev=40.0),
        Mixed(300, 0.35),
        IntervalUniform(1000, 250, 750),
    ]
    for dist in cases:
        samples = np.sort([dist.sample(rng) for _ in range(n)])
        cdf = np.cumsum(masses(dist))
        empirical = np.searchsorted(samples, np.arange(dist.capacity + 1), side="right") / n
        stat = np.max(np.abs(empirical - cdf))
        assert stat < critical, f"{dist}: KS statistic {stat:.5f} >= {critical:.5f}"


def test_normal_truncated_large_capacity_consistency():
    # Approximate regime must stay close to the exact lattice sums.
    c = 10**7
    dist = NormalTruncated(c, mean=c / 2, stddev=c / 10)
    assert abs(dist.interval_mass(0, c) - 1.0) < 1e-9
    exact_scaled = NormalTruncated(10**4, mean=10**4 / 2, stddev=10**3)
    approx = dist.failure_prob(int(0.4 * c))
    exact = exact_scaled.failure_prob(4000)
    assert approx == pytest.approx(exact, rel=1e-3)


def test_normal_truncated_conditioning_large_capacity():
    c = 10**7
    prior = NormalTruncated(c, mean=c / 2, stddev=c / 10)
    post = condition_on_failure(prior, int(0.5 * c))
    assert post.support()[1] == int(0.5 * c) - 1
    assert post.interval_mass(0, c) == pytest.approx(1.0, abs=1e-9)


@given(distributions(max_capacity=60), st.data())
def test_restriction_composes(dist, data):
    c = dist.capacity
    lo1 = data.draw(st.integers(min_value=0, max_value=c))
    hi1 = data.draw(st.integers(min_value=lo1, max_value=c))
    if dist.interval_mass(lo1, hi1) <= 0:
        return
    once = dist.restrict(lo1, hi1)
    lo2 = data.draw(st.integers(min_value=0, max_value=c))
    hi2 = data.draw(st.integers(min_value=lo2, max_value=c))
    if once.interval_mass(lo2, hi2) <= 0:
        return
    twice = once.restrict(lo2, hi2)
    oracle = brute_force_condition(dist, max(lo1, lo2), min(hi1, hi2))
    assert np.max(np.abs(masses(twice) - oracle)) <= 1e-12
