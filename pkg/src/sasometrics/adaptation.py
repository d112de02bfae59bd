"""Adaptation-behaviour measures over configuration time series.

Four families live here:

* configuration stability: per-agent Parzen densities over two adjacent
  windows, compared with a sample-based Kullback-Leibler estimate; the share of
  agents whose density moved is turned into an activity factor whose
  fluctuation variance is the reported value.
* configuration variability: mean over k = 1..ceil(sqrt(|S|)) of the k-means
  average centroid distance.
* configuration coherence: 1 / (1 + population variance of the vectors).
* parameter utilisation: observed range of one configuration entry over a
  trailing window relative to its design-time range, pooled or per agent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationSeries, MetricSeries, WarmUpError, Window

BANDWIDTH_FLOOR = 1e-3
_LOG_2PI = math.log(2.0 * math.pi)


class UsageBoundsWarning(UserWarning):
    """Observed configuration values fall outside the declared usage bounds."""


@dataclass(frozen=True)
class StabilityParams:
    M: int = 15
    L: int = 15
    epsilon: float = 2.0
    bandwidth_rule: str = "silverman"

    def __post_init__(self):
        if self.M < 2 or self.L < 2:
            raise ValueError("stability windows need M >= 2 and L >= 2")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.bandwidth_rule != "silverman":
            raise ValueError(f"unknown bandwidth rule {self.bandwidth_rule!r}")

    @property
    def first_activity_tick(self) -> int:
        return 2 * self.L - 1

    @property
    def warm_up(self) -> int:
        """First tick with a stability value."""
        return self.first_activity_tick + 2 * (self.M - 1)


@dataclass(frozen=True)
class UsageBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if np.any(hi <= lo):
            raise ValueError("every parameter needs max > min")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def __len__(self) -> int:
        return self.lower.size


# -- Parzen densities and KL ---------------------------------------------------


def silverman_bandwidth(samples: np.ndarray) -> np.ndarray:
    """Per-dimension Silverman bandwidth, floored at ``BANDWIDTH_FLOOR``.

    ``samples`` has shape ``(..., m, d)``; result has shape ``(..., d)``.
    """
    m, d = samples.shape[-2:]
    if m > 1:
        sigma = samples.std(axis=-2, ddof=1)
    else:
        sigma = np.zeros(samples.shape[:-2] + (d,))
    h = sigma * (4.0 / ((d + 2) * m)) ** (1.0 / (d + 4))
    return np.maximum(h, BANDWIDTH_FLOOR)


def _as_samples(samples) -> np.ndarray:
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("need a non-empty (m, d) sample array")
    return s


def _log_mixture(points: np.ndarray, centres: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Log of a diagonal Gaussian kernel mixture, batched over leading axes.

    points: (..., p, d), centres: (..., m, d), h: (..., d) -> (..., p)
    """
    h_ = h[..., None, None, :]
    z = (points[..., :, None, :] - centres[..., None, :, :]) / h_
    log_k = -0.5 * np.sum(z * z, axis=-1)
    top = log_k.max(axis=-1, keepdims=True)
    lse = top[..., 0] + np.log(np.exp(log_k - top).sum(axis=-1))
    m, d = centres.shape[-2:]
    norm = np.log(h).sum(axis=-1)[..., None] + 0.5 * d * _LOG_2PI + math.log(m)
    return lse - norm


@dataclass(frozen=True)
class ParzenDensity:
    samples: np.ndarray
    bandwidth: np.ndarray

    def log_pdf(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        single = pts.ndim <= 1 and pts.size == self.samples.shape[1]
        pts = pts.reshape(-1, self.samples.shape[1])
        out = _log_mixture(pts, self.samples, self.bandwidth)
        return out[0] if single else out

    def __call__(self, x):
        return np.exp(self.log_pdf(x))


def parzen_density(samples, bandwidth=None) -> ParzenDensity:
    """Gaussian-kernel density over ``samples`` (rows are configuration vectors).

    ``bandwidth`` may be a scalar, a per-dimension sequence, or None for the
    Silverman rule.
    """
    s = _as_samples(samples)
    if bandwidth is None:
        h = silverman_bandwidth(s)
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (s.shape[1],)).copy()
        if np.any(h <= 0):
            raise ValueError("bandwidth must be positive")
    return ParzenDensity(s, h)


def kl_divergence(p: ParzenDensity, q: ParzenDensity) -> float:
    """Monte-Carlo KL(p || q) evaluated at p's own samples, clamped at 0."""
    d = float(np.mean(p.log_pdf(p.samples) - q.log_pdf(p.samples)))
    return max(d, 0.0)


def _unique_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of first occurrences and the inverse map for the distinct rows."""
    # sorting scalar keys is far cheaper than a row-wise sort; verify and
    # fall back if two different rows ever share a key
    weights = np.random.default_rng(0).uniform(0.5, 1.5, size=rows.shape[1])
    _, first, inverse = np.unique(rows @ weights, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    if not np.array_equal(rows, rows[first][inverse]):
        _, first, inverse = np.unique(rows, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
    return first, inverse


def batch_kl(current: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """KL(current || previous) per agent for windows of shape ``(agents, m, d)``.

    Agents whose two windows are element-wise identical get exactly 0, and
    agents sharing the same pair of windows share one evaluation.
    """
    out = np.zeros(current.shape[0])
    same = np.all(current == previous, axis=(1, 2))
    todo = np.flatnonzero(~same)
    if todo.size == 0:
        return out
    cur = current[todo]
    prev = previous[todo]
    if cur.shape[2] == 1:
        # the estimate ignores sample order, so sorting exposes more repeats
        cur = np.sort(cur, axis=1)
        prev = np.sort(prev, axis=1)
    pairs = np.concatenate([cur.reshape(len(todo), -1), prev.reshape(len(todo), -1)], axis=1)
    first, inverse = _unique_rows(pairs)
    cur, prev = cur[first], prev[first]
    hc = silverman_bandwidth(cur)
    hp = silverman_bandwidth(prev)
    lp = _log_mixture(cur, cur, hc)
    lq = _log_mixture(cur, prev, hp)
    kl = np.maximum((lp - lq).mean(axis=-1), 0.0)
    out[todo] = kl[inverse.reshape(-1)]
    return out


# -- configuration stability ---------------------------------------------------


def is_active(series: ConfigurationSeries, agent, tick: int, params: StabilityParams) -> bool:
    L = params.L
    if tick < 2 * L - 1:
        raise WarmUpError(f"activity needs tick >= {2 * L - 1}, got {tick}")
    cur = series.slice(Window(tick, L), agent)
    prev = series.slice(Window(tick - L, L), agent)
    if params.epsilon == math.inf:
        return False
    return kl_divergence(parzen_density(cur), parzen_density(prev)) > params.epsilon


def activity_factor(n_active: int, n_agents: int) -> float:
    if n_agents < 1 or not 0 <= n_active <= n_agents:
        raise ValueError("need 0 <= n_active <= n_agents and n_agents >= 1")
    return (2 * n_active - n_agents + 1) / (2 * n_agents)


def active_counts(data: np.ndarray, params: StabilityParams) -> tuple[np.ndarray, np.ndarray]:
    """Number of active agents per tick for a ``(ticks, agents, dim)`` array.

    Returns ``(ticks, counts)`` starting at the first tick with two full windows.
    """
    L = params.L
    T = data.shape[0]
    ticks = np.arange(2 * L - 1, T)
    counts = np.zeros(ticks.size, dtype=np.int64)
    for i, t in enumerate(ticks):
        cur = np.swapaxes(data[t - L + 1 : t + 1], 0, 1)
        prev = np.swapaxes(data[t - 2 * L + 1 : t - L + 1], 0, 1)
        counts[i] = int(np.count_nonzero(batch_kl(cur, prev) > params.epsilon))
    return ticks, counts


def fluctuation_variance(z: np.ndarray, M: int) -> np.ndarray:
    """Variance of the activity fluctuation for each full M-window of fluctuations.

    Input is a consecutive activity-factor sequence; output entry ``i`` belongs
    to position ``i + 2(M-1)`` of the input.
    """
    z = np.asarray(z, dtype=float)
    if z.size < 2 * M - 1:
        return np.empty(0)
    zw = np.lib.stride_tricks.sliding_window_view(z, M)
    xi = z[M - 1 :] - zw.mean(axis=1)
    xw = np.lib.stride_tricks.sliding_window_view(xi, M)
    nu = np.mean(xw * xw, axis=1) - np.mean(xw, axis=1) ** 2
    return np.maximum(nu, 0.0)


def stability_series(data: np.ndarray, params: StabilityParams) -> MetricSeries:
    data = np.asarray(data, dtype=float)
    n_agents = data.shape[1]
    ticks, counts = active_counts(data, params)
    z = (2 * counts - n_agents + 1) / (2 * n_agents)
    nu = fluctuation_variance(z, params.M)
    out_ticks = ticks[2 * (params.M - 1) :]
    return MetricSeries.from_arrays(
        "stability", out_ticks, nu, M=params.M, L=params.L, epsilon=params.epsilon
    )


def configuration_stability(series: ConfigurationSeries, tick: int, params: StabilityParams) -> float:
    if tick < params.warm_up:
        raise WarmUpError(f"stability needs tick >= {params.warm_up}, got {tick}")
    if tick > series.horizon:
        raise WarmUpError(f"tick {tick} beyond horizon {series.horizon}")
    first = tick - 2 * (params.M - 1) - (2 * params.L - 1)
    data = series.as_array()[first : tick + 1]
    return stability_series(data, params).values[-1]


# -- configuration variability -------------------------------------------------


def _sse(points, weights, labels, centres) -> float:
    diff = points - centres[labels]
    return float(np.sum(weights * np.sum(diff * diff, axis=1)))


def _farthest_point_init(points: np.ndarray, k: int, first: int) -> np.ndarray:
    chosen = [first]
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen]


def _batched_lloyd(points, weights, centres, max_iter):
    """Lloyd iterations for R restarts at once; centres has shape (R, k, d)."""
    R, k, _ = centres.shape
    eye = np.eye(k)
    labels = None
    for _ in range(max_iter):
        d2 = np.sum((points[None, :, None, :] - centres[:, None, :, :]) ** 2, axis=3)
        new = np.argmin(d2, axis=2)  # first minimum: lowest cluster index wins ties
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        member = eye[labels] * weights[None, :, None]  # (R, n, k)
        wsum = member.sum(axis=1)
        sums = np.einsum("rnk,nd->rkd", member, points)
        empty = wsum == 0
        centres = np.where(empty[..., None], centres, sums / np.where(empty, 1.0, wsum)[..., None])
        for r, j in zip(*np.nonzero(empty)):
            far = int(np.argmax(weights * d2[r].min(axis=1)))
            centres[r, j] = points[far]
    return labels


def _centroids(points, weights, labels, k):
    member = np.eye(k)[labels] * weights[:, None]
    wsum = member.sum(axis=0)
    return member.T @ points / np.where(wsum == 0, 1.0, wsum)[:, None], wsum


def _refine(points, weights, labels, k, max_moves=1000):
    """Apply the best SSE-lowering single-point move until none is left."""
    labels = labels.copy()
    for _ in range(max_moves):
        centres, wsum = _centroids(points, weights, labels, k)
        d2 = np.sum((points[:, None, :] - centres[None, :, :]) ** 2, axis=2)
        own = wsum[labels]
        movable = own > weights
        gain_out = np.where(
            movable, weights * own / np.where(movable, own - weights, 1.0), 0.0
        ) * d2[np.arange(len(labels)), labels]
        cost_in = weights[:, None] * wsum[None, :] / (wsum[None, :] + weights[:, None]) * d2
        cost_in[np.arange(len(labels)), labels] = np.inf
        best_b = np.argmin(cost_in, axis=1)
        delta = gain_out - cost_in[np.arange(len(labels)), best_b]
        delta[~movable] = -np.inf
        i = int(np.argmax(delta))
        if delta[i] <= 1e-12 * max(gain_out[i], 1.0):
            break
        labels[i] = best_b[i]
    return labels, _centroids(points, weights, labels, k)[0]


def kmeans(points, k: int, weights=None, seed: int = 0, n_init: int = 10, max_iter: int = 100, n_refine: int = 10):
    """Deterministic weighted k-means.

    Restarts use farthest-point seeding from different first points plus
    random k-subsets of the points, all drawn from a seeded generator. Lloyd
    iterations run on every restart; the ``n_refine`` best distinct outcomes
    are then polished with single-point moves and the lowest weighted SSE
    wins. Returns ``(labels, centres)``.
    """
    pts = _as_samples(points)
    n = pts.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if k == 1:
        return np.zeros(n, dtype=np.int64), (w @ pts / w.sum())[None, :]
    rng = np.random.default_rng(seed)
    inits = [
        _farthest_point_init(pts, k, int(first))
        for first in rng.permutation(n)[: max(1, min(n_init, n))]
    ]
    inits += [pts[rng.choice(n, size=k, replace=False)] for _ in range(n_init)]
    all_labels = _batched_lloyd(pts, w, np.array(inits), max_iter)

    candidates = {}
    for labels in all_labels:
        key = labels.tobytes()
        if key not in candidates:
            centres, _ = _centroids(pts, w, labels, k)
            candidates[key] = (_sse(pts, w, labels, centres), labels)
    ranked = sorted(candidates.values(), key=lambda c: c[0])[:n_refine]
    best = None
    for _, labels in ranked:
        labels, centres = _refine(pts, w, labels, k)
        cost = _sse(pts, w, labels, centres)
        if best is None or cost < best[0] - 1e-12:
            best = (cost, labels, centres)
    return best[1], best[2]


def _unique_weighted(vectors) -> tuple[np.ndarray, np.ndarray]:
    v = _as_samples(vectors)
    if v.shape[1] == 1:
        uniq, counts = np.unique(v[:, 0], return_counts=True)
        return uniq[:, None], counts.astype(float)
    uniq, counts = np.unique(v, axis=0, return_counts=True)
    return uniq, counts.astype(float)


def _centroid_distance_sum(points, weights, labels, centres) -> float:
    dist = np.linalg.norm(points - centres[labels], axis=1)
    return float(np.sum(weights * dist))


def optimal_partitions_1d(points, weights, k_max: int) -> list[np.ndarray]:
    """Minimum-SSE partitions of 1-D points for every k in ``1..k_max``.

    Optimal clusters of sorted scalars are contiguous runs, so a dynamic
    program over split points finds the exact optimum. ``points`` must be
    sorted; entry ``k - 1`` of the result holds the labels for k clusters.
    """
    x = np.asarray(points, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float)
    n = x.size
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max must be in [1, {n}]")
    x = x - np.average(x, weights=w)
    p0 = np.concatenate(([0.0], np.cumsum(w)))
    p1 = np.concatenate(([0.0], np.cumsum(w * x)))
    p2 = np.concatenate(([0.0], np.cumsum(w * x * x)))
    i, j = np.triu_indices(n)
    cost = np.full((n, n), np.inf)
    s1 = p1[j + 1] - p1[i]
    cost[i, j] = np.maximum(p2[j + 1] - p2[i] - s1 * s1 / (p0[j + 1] - p0[i]), 0.0)

    best = cost[0].copy()
    starts = [np.zeros(n, dtype=np.int64)]
    for _ in range(2, k_max + 1):
        # last cluster runs from s to j, with s >= 1
        cand = best[:-1, None] + cost[1:, :]
        arg = np.argmin(cand, axis=0)
        best = cand[arg, np.arange(n)]
        starts.append(arg + 1)

    labels = []
    for k in range(1, k_max + 1):
        lab = np.empty(n, dtype=np.int64)
        end = n - 1
        for c in range(k - 1, -1, -1):
            s = int(starts[c][end]) if c > 0 else 0
            lab[s : end + 1] = c
            end = s - 1
        labels.append(lab)
    return labels


def _cluster_distance_sums(pts, w, ks, seed) -> dict[int, float]:
    out = {}
    if pts.shape[1] == 1:
        parts = optimal_partitions_1d(pts[:, 0], w, max(ks))
        for k in ks:
            lab = parts[k - 1]
            out[k] = _centroid_distance_sum(pts, w, lab, _centroids(pts, w, lab, k)[0])
        return out
    for k in ks:
        labels, centres = kmeans(pts, k, weights=w, seed=seed)
        out[k] = _centroid_distance_sum(pts, w, labels, centres)
    return out


def average_centroid_distance(vectors, k: int, seed: int = 0) -> float:
    """Sum of point-to-centroid distances over a k-means clustering, divided by k."""
    v = _as_samples(vectors)
    if not 1 <= k <= v.shape[0]:
        raise ValueError(f"k must be in [1, {v.shape[0]}], got {k}")
    pts, w = _unique_weighted(v)
    if pts.shape[0] <= k:
        return 0.0
    return _cluster_distance_sums(pts, w, [k], seed)[k] / k


def configuration_variability(vectors, seed: int = 0) -> float:
    v = _as_samples(vectors)
    k_max = math.ceil(math.sqrt(v.shape[0]))
    pts, w = _unique_weighted(v)
    ks = [k for k in range(1, k_max + 1) if k < pts.shape[0]]
    if not ks:
        return 0.0
    sums = _cluster_distance_sums(pts, w, ks, seed)
    return sum(sums[k] / k for k in ks) / k_max


def variability_series(data: np.ndarray, seed: int = 0) -> MetricSeries:
    series = MetricSeries("variability", {})
    last_key, last_val = None, 0.0
    for t in range(data.shape[0]):
        frame = np.ascontiguousarray(data[t])
        key = frame.tobytes()
        if key != last_key:
            last_key, last_val = key, configuration_variability(frame, seed=seed)
        series.append(t, last_val)
    return series


# -- configuration coherence ---------------------------------------------------


def configuration_coherence(vectors) -> float:
    v = _as_samples(vectors)
    centre = v.mean(axis=0)
    var = float(np.mean(np.sum((v - centre) ** 2, axis=1)))
    return 1.0 / (1.0 + var)


def coherence_series(data: np.ndarray) -> MetricSeries:
    data = np.asarray(data, dtype=float)
    centre = data.mean(axis=1, keepdims=True)
    var = np.mean(np.sum((data - centre) ** 2, axis=2), axis=1)
    # identical vectors must give exactly 1
    same = np.all(data == data[:, :1], axis=(1, 2))
    var[same] = 0.0
    return MetricSeries.from_arrays("coherence", range(data.shape[0]), 1.0 / (1.0 + var))


# -- parameter utilisation -----------------------------------------------------


def _usage_window(series: ConfigurationSeries, tick: int, L: int) -> np.ndarray:
    # the window runs from tick - L to tick inclusive
    return series.slice(Window(tick, L + 1))


def _check_bounds(block: np.ndarray, j: int, bounds: UsageBounds) -> None:
    if block.min() < bounds.lower[j] or block.max() > bounds.upper[j]:
        warnings.warn(
            f"parameter {j} observed outside [{bounds.lower[j]}, {bounds.upper[j]}]",
            UsageBoundsWarning,
            stacklevel=3,
        )


def global_parameter_usage(series: ConfigurationSeries, j: int, tick: int, L: int, bounds: UsageBounds) -> float:
    block = _usage_window(series, tick, L)[:, :, j]
    _check_bounds(block, j, bounds)
    return float((block.max() - block.min()) / bounds.span[j])


def average_parameter_usage(series: ConfigurationSeries, j: int, tick: int, L: int, bounds: UsageBounds) -> float:
    block = _usage_window(series, tick, L)[:, :, j]
    _check_bounds(block, j, bounds)
    ranges = block.max(axis=0) - block.min(axis=0)
    return float(ranges.sum() / (bounds.span[j] * block.shape[1]))


def usage_series(data: np.ndarray, j: int, L: int, bounds: UsageBounds) -> tuple[MetricSeries, MetricSeries]:
    """Global and average usage of parameter ``j`` for every tick >= L."""
    col = np.asarray(data, dtype=float)[:, :, j]
    if col.shape[0] <= L:
        raise WarmUpError(f"usage needs more than {L} ticks")
    if col.min() < bounds.lower[j] or col.max() > bounds.upper[j]:
        warnings.warn(f"parameter {j} observed outside its bounds", UsageBoundsWarning, stacklevel=2)
    win = np.lib.stride_tricks.sliding_window_view(col, L + 1, axis=0)  # (T-L, agents, L+1)
    hi = win.max(axis=2)
    lo = win.min(axis=2)
    span = bounds.span[j]
    g = (hi.max(axis=1) - lo.min(axis=1)) / span
    a = (hi - lo).mean(axis=1) / span
    ticks = range(L, col.shape[0])
    return (
        MetricSeries.from_arrays("global_usage", ticks, g, L=L, parameter=j),
        MetricSeries.from_arrays("average_usage", ticks, a, L=L, parameter=j),
    )
