import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sasometrics.acceptance import exhaustive_average_centroid_distance
from sasometrics.adaptation import (
    StabilityParams,
    UsageBounds,
    UsageBoundsWarning,
    activity_factor,
    active_counts,
    average_centroid_distance,
    average_parameter_usage,
    batch_kl,
    coherence_series,
    configuration_coherence,
    configuration_stability,
    configuration_variability,
    fluctuation_variance,
    global_parameter_usage,
    is_active,
    kl_divergence,
    kmeans,
    optimal_partitions_1d,
    parzen_density,
    silverman_bandwidth,
    stability_series,
    usage_series,
    variability_series,
)
from sasometrics.core import ConfigurationSeries, WarmUpError


def series_from(data):
    data = np.asarray(data, dtype=float)
    s = ConfigurationSeries(range(data.shape[1]), data.shape[2])
    for frame in data:
        s.append_tick(frame)
    return s


# -- densities and KL ---------------------------------------------------------


def test_silverman_bandwidth_formula():
    x = np.array([[0.0], [1.0], [2.0], [4.0]])
    expected = np.std(x, ddof=1) * (4 / (3 * 4)) ** (1 / 5)
    assert silverman_bandwidth(x)[0] == pytest.approx(expected)
    assert silverman_bandwidth(np.zeros((5, 2))).tolist() == [1e-3, 1e-3]


def test_single_kernel_density():
    p = parzen_density([[0.0]], 1.0)
    assert p(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert p(0.0) > p(0.5)


def test_identical_samples_collapse():
    xs = np.linspace(-2, 2, 9)
    assert np.allclose(parzen_density([[1.0], [1.0]], 0.4)(xs), parzen_density([[1.0]], 0.4)(xs))


def test_kl_closed_form():
    p = parzen_density([[0.0]] * 3, 1.0)
    q = parzen_density([[10.0]] * 3, 1.0)
    assert kl_divergence(p, q) == pytest.approx(50.0, abs=1e-9)
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-9)


def test_kl_increases_with_separation():
    base = np.array([[0.0], [0.5], [0.7]])
    kls = [kl_divergence(parzen_density(base, 0.5), parzen_density(base + d, 0.5)) for d in np.linspace(0, 10, 21)]
    assert all(b > a for a, b in zip(kls, kls[1:]))


@settings(max_examples=40, deadline=None)
@given(arrays(float, (4, 6, 2), elements=st.floats(-50, 50)), arrays(float, (4, 6, 2), elements=st.floats(-50, 50)))
def test_batch_kl_matches_scalar(cur, prev):
    got = batch_kl(cur, prev)
    for i in range(cur.shape[0]):
        want = kl_divergence(parzen_density(cur[i]), parzen_density(prev[i]))
        assert got[i] == pytest.approx(want, rel=1e-9, abs=1e-9)
    assert np.all(got >= 0)


def test_batch_kl_shares_repeated_windows():
    cur = np.array([[[0.0], [1.0], [2.0]], [[2.0], [0.0], [1.0]], [[5.0], [5.0], [5.0]]])
    prev = np.array([[[3.0], [4.0], [6.0]], [[6.0], [3.0], [4.0]], [[5.0], [5.0], [5.0]]])
    kl = batch_kl(cur, prev)
    assert kl[0] == pytest.approx(kl[1])
    assert kl[2] == 0.0


# -- stability ----------------------------------------------------------------


def test_activity_factor_examples():
    assert activity_factor(1, 1) == 1.0
    assert activity_factor(0, 50) == pytest.approx(-0.49)
    assert activity_factor(50, 50) == pytest.approx(0.51)
    with pytest.raises(ValueError):
        activity_factor(3, 2)


def test_is_active():
    L = 6
    step = series_from(np.r_[np.zeros(L), np.full(L, 20.0)].reshape(-1, 1, 1))
    flat = series_from(np.full((2 * L, 1, 1), 1.0))
    assert is_active(step, 0, 2 * L - 1, StabilityParams(L=L, epsilon=0.1))
    assert not is_active(flat, 0, 2 * L - 1, StabilityParams(L=L, epsilon=0.1))
    assert not is_active(step, 0, 2 * L - 1, StabilityParams(L=L, epsilon=math.inf))
    with pytest.raises(WarmUpError):
        is_active(step, 0, 2 * L - 2, StabilityParams(L=L))


def test_alternating_activity_variance():
    z = [activity_factor(0 if t % 2 == 0 else 50, 50) for t in range(20)]
    assert np.allclose(fluctuation_variance(z, 2), 0.25)


def test_fluctuation_variance_brute_force():
    rng = np.random.default_rng(0)
    z = rng.uniform(-0.5, 0.5, 40)
    M = 5
    xi = [z[t] - np.mean(z[t - M + 1 : t + 1]) for t in range(M - 1, len(z))]
    want = [np.var(xi[i - M + 1 : i + 1]) for i in range(M - 1, len(xi))]
    assert np.allclose(fluctuation_variance(z, M), want)


@given(st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=60), st.integers(2, 8))
def test_fluctuation_variance_non_negative(z, M):
    assert np.all(fluctuation_variance(z, M) >= 0)


def test_stability_zero_on_constant_activity():
    params = StabilityParams(M=3, L=4, epsilon=0.5)
    T = params.warm_up + 12
    assert np.all(np.array(stability_series(np.zeros((T, 5, 1)), params).values) == 0)
    busy = np.arange(T)[:, None, None] * 40.0 * np.ones((1, 5, 2))
    assert np.all(np.array(stability_series(busy, params).values) == 0)


def test_stability_series_warm_up_and_point_query():
    params = StabilityParams(M=3, L=4, epsilon=0.5)
    rng = np.random.default_rng(1)
    data = np.cumsum(rng.normal(size=(40, 6, 1)) * rng.choice([0, 5], size=(40, 6, 1)), axis=0)
    s = stability_series(data, params)
    assert s.ticks[0] == params.warm_up == 2 * 4 - 1 + 2 * 2
    series = series_from(data)
    for t in (params.warm_up, 25, 39):
        assert configuration_stability(series, t, params) == pytest.approx(s.value_at(t))
    with pytest.raises(WarmUpError):
        configuration_stability(series, params.warm_up - 1, params)


def test_active_counts_agree_with_is_active():
    params = StabilityParams(M=2, L=3, epsilon=0.3)
    rng = np.random.default_rng(2)
    data = np.cumsum(rng.normal(size=(14, 4, 1)) * rng.choice([0.0, 3.0], size=(14, 4, 1)), axis=0)
    series = series_from(data)
    ticks, counts = active_counts(data, params)
    for t, n in zip(ticks, counts):
        assert n == sum(is_active(series, a, int(t), params) for a in range(4))


# -- variability --------------------------------------------------------------


def test_centroid_distance_examples():
    assert average_centroid_distance([[0.0], [2.0]], 1) == pytest.approx(2.0)
    assert average_centroid_distance([[0.0], [2.0]], 2) == 0.0
    assert average_centroid_distance([[3.0, 1.0]] * 4, 2) == 0.0
    with pytest.raises(ValueError):
        average_centroid_distance([[0.0]], 2)


def test_variability_examples():
    assert configuration_variability([[0.0], [2.0]]) == pytest.approx(1.0)
    assert configuration_variability([[1.0]] * 4) == 0.0
    pts = [[0.0], [1.0], [5.0], [6.0]]
    s1, s2 = average_centroid_distance(pts, 1), average_centroid_distance(pts, 2)
    assert configuration_variability(pts) == pytest.approx((s1 + s2) / 2)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6), st.integers(1, 2), st.integers(0, 2**31))
def test_clustering_matches_enumeration(m, d, seed):
    pts = np.random.default_rng(seed).normal(size=(m, d))
    for k in range(1, m + 1):
        got = average_centroid_distance(pts, k, seed=seed % 7)
        assert got == pytest.approx(exhaustive_average_centroid_distance(pts, k), abs=1e-9)


def test_kmeans_separated_blobs():
    rng = np.random.default_rng(4)
    centres = np.array([[0, 0], [20, 0], [0, 20]])
    pts = np.concatenate([c + rng.normal(size=(15, 2)) for c in centres])
    labels, found = kmeans(pts, 3, seed=1)
    assert len(set(labels[:15])) == len(set(labels[15:30])) == len(set(labels[30:])) == 1
    assert np.allclose(np.sort(found[:, 0]), np.sort(pts.reshape(3, 15, 2).mean(axis=1)[:, 0]))


def test_kmeans_is_deterministic():
    pts = np.random.default_rng(5).normal(size=(30, 3))
    a, b = kmeans(pts, 4, seed=3), kmeans(pts, 4, seed=3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_optimal_partitions_are_contiguous_runs():
    x = np.array([0.0, 0.1, 0.2, 5.0, 5.1, 9.0])
    parts = optimal_partitions_1d(x, np.ones(6), 3)
    assert parts[0].tolist() == [0] * 6
    assert parts[2].tolist() == [0, 0, 0, 1, 1, 2]


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(2, 30), elements=st.floats(-100, 100)))
def test_optimal_sse_falls_with_k(x):
    pts, counts = np.unique(x, return_counts=True)
    parts = optimal_partitions_1d(pts, counts, len(pts))
    sse = []
    for labels in parts:
        total = 0.0
        for j in np.unique(labels):
            member, w = pts[labels == j], counts[labels == j]
            total += float(np.sum(w * (member - np.average(member, weights=w)) ** 2))
        sse.append(total)
    assert all(b <= a + 1e-7 for a, b in zip(sse, sse[1:]))
    assert sse[-1] == pytest.approx(0.0, abs=1e-9)
    assert average_centroid_distance(x[:, None], len(x)) == 0.0


def test_variability_series_reuses_unchanged_frames():
    data = np.zeros((4, 9, 1))
    data[:, :, 0] = np.arange(9)
    data[2:] += 1.0
    s = variability_series(data)
    assert s.values[0] == s.values[1] == s.values[2] == s.values[3] > 0


# -- coherence ----------------------------------------------------------------


def test_coherence_examples():
    assert configuration_coherence([[1.0, 2.0]] * 3) == 1.0
    assert configuration_coherence([[0.0], [2.0]]) == 0.5
    assert configuration_coherence([[0.0], [2.0]]) > configuration_coherence([[0.0], [4.0]])


@given(arrays(float, st.tuples(st.integers(2, 8), st.integers(1, 3)), elements=st.floats(-1e3, 1e3)))
def test_coherence_in_unit_interval(v):
    c = configuration_coherence(v)
    assert 0 < c <= 1
    if np.all(v == v[0]):
        assert c == 1.0


def test_coherence_series_matches_pointwise():
    rng = np.random.default_rng(6)
    data = rng.normal(size=(5, 4, 2))
    data[3] = data[3, :1]
    s = coherence_series(data)
    assert s.values[3] == 1.0
    for t in range(5):
        assert s.values[t] == pytest.approx(configuration_coherence(data[t]))


# -- usage --------------------------------------------------------------------


B10 = UsageBounds([0.0], [10.0])


def test_usage_examples():
    assert global_parameter_usage(series_from(np.full((6, 2, 1), 3.0)), 0, 5, 5, B10) == 0
    full = series_from(np.linspace(0, 10, 6)[:, None, None] * np.ones((1, 3, 1)))
    assert global_parameter_usage(full, 0, 5, 5, B10) == pytest.approx(1.0)
    assert average_parameter_usage(full, 0, 5, 5, B10) == pytest.approx(1.0)
    assert global_parameter_usage(series_from(np.arange(2.0, 8.0)[:, None, None]), 0, 5, 5, B10) == pytest.approx(0.5)
    two = np.zeros((6, 2, 1))
    two[:, 0, 0] = [1, 3, 2, 2, 1, 1]
    two[:, 1, 0] = [5, 5, 9, 6, 7, 5]
    assert average_parameter_usage(series_from(two), 0, 5, 5, B10) == pytest.approx(0.3)


def test_usage_window_needs_history():
    with pytest.raises(WarmUpError):
        global_parameter_usage(series_from(np.zeros((5, 1, 1))), 0, 4, 5, B10)


def test_usage_outside_bounds_warns_but_computes():
    data = np.array([0.0, 12.0, 3.0, 3.0, 3.0, 3.0])[:, None, None]
    with pytest.warns(UsageBoundsWarning):
        value = global_parameter_usage(series_from(data), 0, 5, 5, B10)
    assert value == pytest.approx(1.2)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(6, 12), st.integers(1, 5), st.just(2)), elements=st.floats(0, 10)))
def test_usage_series_properties(data):
    bounds = UsageBounds([0.0, 0.0], [10.0, 10.0])
    series = series_from(data)
    for j in range(2):
        g, a = usage_series(data, j, 5, bounds)
        assert g.ticks[0] == 5
        assert np.all(np.array(g.values) >= np.array(a.values) - 1e-12)
        assert np.all((np.array(a.values) >= 0) & (np.array(g.values) <= 1 + 1e-12))
        t = g.ticks[-1]
        assert g.value_at(t) == pytest.approx(global_parameter_usage(series, j, t, 5, bounds))
        assert a.value_at(t) == pytest.approx(average_parameter_usage(series, j, t, 5, bounds))


def test_usage_bounds_validation():
    with pytest.raises(ValueError):
        UsageBounds([1.0], [1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        usage_series(np.ones((7, 2, 1)), 0, 5, B10)
