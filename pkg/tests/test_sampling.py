import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from dualsplit.numerics import DimensionMismatch
from dualsplit.sampling import (Distribution, InvalidParameter, Rng, adapt,
                                make_distribution, sample)


def test_uniform():
    assert np.array_equal(make_distribution("uniform", N=3).probs, [0.25] * 4)


def test_truncated_poisson_hand_values():
    probs = make_distribution("poisson", {"rate": 1.0}, N=2).probs
    e = math.exp(-1.0)
    hand = np.array([e, e, e / 2]) / (2.5 * e)
    assert np.allclose(hand, [0.4, 0.4, 0.2], rtol=1e-15)
    assert np.allclose(probs, [0.4, 0.4, 0.2], rtol=1e-12)


def test_truncated_pareto_follows_density():
    probs = make_distribution("pareto", {"shape": 2.0, "scale": 1.0}, N=2).probs
    # generalized Pareto density (1 + c t / s)^(-1/c - 1) / s at t = 0, 1, 2
    w = np.array([1.0, 3.0 ** -1.5, 5.0 ** -1.5])
    assert np.allclose(probs, w / w.sum(), rtol=1e-12)


@pytest.mark.parametrize("params", [{"shape": 0.0}, {"shape": -1.0},
                                    {"scale": 0.0}])
def test_pareto_rejects_nonpositive_parameters(params):
    with pytest.raises(InvalidParameter):
        make_distribution("pareto", params, N=5)


def test_poisson_rejects_nonpositive_rate():
    with pytest.raises(InvalidParameter):
        make_distribution("poisson", {"rate": 0.0}, N=5)


def test_unknown_kind_and_bad_custom():
    with pytest.raises(InvalidParameter):
        make_distribution("zipf", N=3)
    with pytest.raises(DimensionMismatch):
        make_distribution("custom", {"probs": [1, 1]}, N=3)
    with pytest.raises(InvalidParameter):
        Distribution(np.array([0.5, 0.6]))


def test_default_parameters():
    d = make_distribution("poisson", N=60)
    assert d.params == {"rate": 15.0}
    d = make_distribution("pareto", N=60)
    assert d.params == {"shape": 1.5, "scale": 15.0}


def test_point_mass_always_sampled():
    probs = np.zeros(8)
    probs[5] = 1.0
    idx = sample(Distribution(probs), Rng(3), size=1000)
    assert np.all(idx == 5)


def test_reproducible_stream():
    d = make_distribution("uniform", N=1)
    a = sample(d, Rng(42), size=50)
    b = sample(d, Rng(42), size=50)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample(d, Rng(43), size=50))
    assert isinstance(sample(d, Rng(1)), int)


def test_rng_accepts_tuple_seeds():
    a = Rng((4, 1)).uniforms(5)
    assert np.array_equal(a, Rng((4, 1)).uniforms(5))
    assert not np.array_equal(a, Rng((4, 2)).uniforms(5))


def test_uniform_bins_within_tolerance():
    idx = sample(make_distribution("uniform", N=9), Rng(7), size=10**6)
    freq = np.bincount(idx, minlength=10) / 10**6
    assert np.all(np.abs(freq - 0.1) <= 0.001)
    p = stats.chisquare(np.bincount(idx, minlength=10)).pvalue
    assert p > 0.001


def test_adapt_no_stage_below_threshold_is_identity():
    d = make_distribution("uniform", N=4)
    assert adapt(d, np.ones(5), 0.01) is d


def test_adapt_middle_stage_hand_values():
    d = make_distribution("uniform", N=2)
    out = adapt(d, [1.0, 0.0, 1.0], 0.01)
    assert np.allclose(out.probs, [5 / 12, 2 / 12, 5 / 12], rtol=1e-14)


def test_adapt_boundary_stage_gives_half_to_single_neighbour():
    d = Distribution(np.array([0.5, 0.25, 0.25]))
    out = adapt(d, [0.0, 1.0, 1.0], 0.01)
    assert np.allclose(out.probs, [0.25, 0.5, 0.25], rtol=1e-15)


def test_adapt_all_stages_keeps_unit_sum():
    d = make_distribution("uniform", N=4)
    out = adapt(d, np.zeros(5), 0.01)
    assert abs(out.probs.sum() - 1.0) <= 1e-12


def test_adapt_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        adapt(make_distribution("uniform", N=2), np.zeros(4))


def _adapt_by_hand(probs, hit):
    """The redistribution rule written stage by stage from the input snapshot."""
    N = len(probs) - 1
    out = list(probs)
    for t in range(N + 1):
        if not hit[t] or N == 0:
            continue
        out[t] -= 0.5 * probs[t]
        if t == 0:
            out[1] += 0.5 * probs[t]
        elif t == N:
            out[N - 1] += 0.5 * probs[t]
        else:
            out[t - 1] += 0.25 * probs[t]
            out[t + 1] += 0.25 * probs[t]
    return np.array(out)


distributions = st.integers(1, 12).flatmap(
    lambda N: st.tuples(
        st.lists(st.floats(0.0, 1.0), min_size=N + 1, max_size=N + 1)
        .filter(lambda w: sum(w) > 1e-3),
        st.lists(st.floats(0.0, 0.02), min_size=N + 1, max_size=N + 1)))


@given(distributions)
def test_adapt_is_simultaneous_and_stays_on_simplex(case):
    w, change = case
    d = Distribution(np.array(w) / np.sum(w))
    out = adapt(d, change, 0.01)
    assert abs(out.probs.sum() - 1.0) <= 1e-12
    assert np.all(out.probs >= 0)
    hand = _adapt_by_hand(d.probs, np.array(change) < 0.01)
    assert np.allclose(out.probs, hand / hand.sum(), atol=1e-15)
    # reversing the stage order mirrors the result
    rev = adapt(Distribution(d.probs[::-1].copy()), np.array(change)[::-1], 0.01)
    assert np.allclose(rev.probs[::-1], out.probs, atol=1e-15)


@given(distributions, st.integers(0, 2**31 - 1))
def test_sample_never_returns_zero_probability_stage(case, seed):
    w, _ = case
    w = np.array(w)
    w[::2] = 0.0
    if w.sum() == 0:
        w[-1] = 1.0
    d = Distribution(w / w.sum())
    idx = sample(d, Rng(seed), size=500)
    assert np.all(d.probs[idx] > 0)
