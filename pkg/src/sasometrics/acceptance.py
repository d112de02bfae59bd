"""Acceptance checks: metric properties, oracles and seeded scenario runs.

``run_all`` evaluates every criterion and returns one ``CriterionResult``
each; ``sasometrics check`` prints them. Scenario criteria use seeds
``0 .. n_seeds - 1`` and need at least 80% of the seeds to pass.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptation import (
    StabilityParams,
    UsageBounds,
    average_centroid_distance,
    average_parameter_usage,
    batch_kl,
    configuration_coherence,
    configuration_variability,
    fluctuation_variance,
    activity_factor,
    global_parameter_usage,
    is_active,
    kl_divergence,
    parzen_density,
    stability_series,
)
from .core import (
    ConfigurationSeries,
    DimensionError,
    DuplicateSampleError,
    MetricSeries,
    WarmUpError,
    Window,
    histogram,
    integer_bins,
    mean_and_variance,
)
from .harness import RunConfig, RunResult, detect_peaks, disturbance_reports, run
from .scenarios import FlockConfig, FlockWorld, LifeWorld, TrafficConfig, TrafficWorld, life_step
from .scenarios.flocking import flocking_headings
from .transferability import (
    ComplexitySignal,
    TransferabilityParams,
    complexity,
    complexity_signal,
    emergence,
    pearson,
    tick_complexity,
    transferability,
    transferability_series,
    windowed_transferability,
)

TOL = 1e-9


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    failures: list[str] = field(default_factory=list)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.title} ({self.seconds:.1f}s): {self.detail}"

    def as_dict(self) -> dict:
        return {
            "criterion": self.number,
            "title": self.title,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
            "failures": self.failures,
        }


class Checklist:
    """Collects named pass/fail checks; a raised exception counts as a failure."""

    def __init__(self):
        self.total = 0
        self.failures: list[str] = []

    def check(self, name: str, fn) -> None:
        self.total += 1
        try:
            ok = fn()
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            self.failures.append(f"{name}: {type(exc).__name__}: {exc}")
            return
        if ok is False:
            self.failures.append(name)

    def raises(self, name: str, exc_type, fn) -> None:
        def attempt():
            try:
                fn()
            except exc_type:
                return True
            return False

        self.check(name, attempt)


def _close(a, b, tol=TOL) -> bool:
    return bool(np.all(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) <= tol))


def _need(n_seeds: int) -> int:
    return math.ceil(0.8 * n_seeds)


def _binary_entropy_root(target: float = 0.5) -> float:
    """Probability p < 1/2 whose normalised binary entropy equals ``target``."""
    lo, hi = 1e-12, 0.5
    for _ in range(200):
        mid = (lo + hi) / 2
        e = -(mid * math.log2(mid) + (1 - mid) * math.log2(1 - mid))
        lo, hi = (mid, hi) if e < target else (lo, mid)
    return (lo + hi) / 2


def _series_from(values) -> ConfigurationSeries:
    """Series from a ``(ticks, agents, dim)`` array."""
    data = np.asarray(values, dtype=float)
    s = ConfigurationSeries(range(data.shape[1]), data.shape[2])
    for frame in data:
        s.append_tick(frame)
    return s


# -- criterion 1 ------------------------------------------------------------


def _core_checks(c: Checklist) -> None:
    def round_trip():
        s = ConfigurationSeries(["a1"], 1).record(0, "a1", (1.0,))
        return _close(s.query(0, "a1"), [1.0])

    c.check("record/query round trip", round_trip)
    c.raises("dimension mismatch", DimensionError, lambda: ConfigurationSeries(["a"], 3).record(0, "a", (1.0, 2.0)))

    def duplicate():
        s = ConfigurationSeries(["a", "b"], 1).record(0, "a", (1.0,))
        s.record(0, "a", (2.0,))

    c.raises("duplicate sample", DuplicateSampleError, duplicate)

    ten = _series_from(np.arange(10.0).reshape(10, 1, 1))
    c.check("window 5..9", lambda: _close(ten.slice(Window(9, 5), 0)[:, 0], [5, 6, 7, 8, 9]))
    c.raises("window before tick 0", WarmUpError, lambda: ten.slice(Window(3, 5), 0))
    c.check("window of tick 0", lambda: _close(ten.slice(Window(0, 1), 0)[:, 0], [0]))

    c.check("histogram top edge", lambda: histogram([0, 0.5, 1.0], 2, (0, 1)).counts.tolist() == [1, 2])
    c.check("histogram one bin", lambda: histogram([0.25] * 4, 4, (0, 1)).counts.tolist() == [0, 4, 0, 0])
    c.check("histogram clamps", lambda: histogram([-5, 5], 2, (0, 1)).counts.tolist() == [1, 1])

    c.check("mean/var constant", lambda: _close(mean_and_variance([1, 1, 1]), (1, 0)))
    c.check("mean/var pair", lambda: _close(mean_and_variance([0, 2]), (1, 1)))
    c.check("mean/var singleton", lambda: _close(mean_and_variance([3]), (3, 0)))


def _stability_checks(c: Checklist) -> None:
    p1 = parzen_density([[0.0]], 0.7)
    c.check("single kernel peaks at its sample", lambda: p1(0.0) > max(p1(0.1), p1(-0.1), p1(1.0)))
    p2 = parzen_density([[0.0], [0.0]], 0.7)
    xs = np.linspace(-3, 3, 13)
    c.check("duplicate samples collapse", lambda: _close(p2(xs), p1(xs)))
    sym = parzen_density([[-1.0], [1.0]], 0.5)
    c.check("symmetric pair", lambda: _close(sym(0.3), sym(-0.3)) and _close(sym(1.0), sym(-1.0)))

    same = parzen_density([[0.0], [1.0], [3.0]], 1.0)
    c.check("KL of identical sets", lambda: abs(kl_divergence(same, same)) <= TOL)
    far = kl_divergence(parzen_density([[0.0]] * 3, 1.0), parzen_density([[10.0]] * 3, 1.0))
    # log N(0; 0, 1) - log N(0; 10, 1) = 10**2 / 2
    c.check("KL of separated point sets", lambda: _close(far, 50.0))

    def sweep():
        base = np.array([[0.0], [0.2], [0.4]])
        kls = [kl_divergence(parzen_density(base, 1.0), parzen_density(base + s, 1.0)) for s in range(11)]
        return all(b > a for a, b in zip(kls, kls[1:]))

    c.check("KL grows with separation", sweep)

    L = 5
    const = _series_from(np.full((2 * L, 1, 1), 3.0))
    step = _series_from(np.r_[np.zeros(L), np.full(L, 20.0)].reshape(-1, 1, 1))
    c.check("constant agent is inactive", lambda: not is_active(const, 0, 2 * L - 1, StabilityParams(L=L, epsilon=0.01)))

    def step_active():
        cur = parzen_density(step.slice(Window(2 * L - 1, L), 0))
        prev = parzen_density(step.slice(Window(L - 1, L), 0))
        oracle = kl_divergence(cur, prev) > 0.01
        return oracle and is_active(step, 0, 2 * L - 1, StabilityParams(L=L, epsilon=0.01))

    c.check("step change is active", step_active)
    c.check("infinite epsilon never active", lambda: not is_active(step, 0, 2 * L - 1, StabilityParams(L=L, epsilon=math.inf)))

    c.check("z(1 of 1)", lambda: _close(activity_factor(1, 1), 1.0))
    c.check("z(0 of 50)", lambda: _close(activity_factor(0, 50), -0.49))
    c.check("z(50 of 50)", lambda: _close(activity_factor(50, 50), 0.51))

    params = StabilityParams(M=3, L=3, epsilon=0.5)
    ticks = params.warm_up + 10
    quiet = np.zeros((ticks, 4, 1))
    busy = (40.0 * np.arange(ticks))[:, None, None] * np.ones((1, 4, 1))
    c.check("nu = 0 when never active", lambda: _close(stability_series(quiet, params).values, 0.0))
    c.check("nu = 0 when always active", lambda: _close(stability_series(busy, params).values, 0.0))
    alternating = np.array([activity_factor(0 if t % 2 == 0 else 50, 50) for t in range(12)])
    # M = 2: xi alternates -0.5, +0.5, so nu = 0.25 - 0
    c.check("alternating activity", lambda: _close(fluctuation_variance(alternating, 2), 0.25))

    rng = np.random.default_rng(11)
    c.check(
        "nu >= 0 on random activity",
        lambda: bool(np.all(fluctuation_variance(rng.uniform(-0.5, 0.5, 200), 7) >= 0)),
    )
    c.check(
        "batch KL matches the scalar estimate",
        lambda: _close(
            batch_kl(np.array([[[0.0], [1.0], [2.0]]]), np.array([[[5.0], [6.0], [9.0]]]))[0],
            kl_divergence(parzen_density([[0.0], [1.0], [2.0]]), parzen_density([[5.0], [6.0], [9.0]])),
        ),
    )


def _variability_usage_checks(c: Checklist) -> None:
    c.check("s_k of identical vectors", lambda: all(average_centroid_distance([[1.5]] * 5, k) == 0 for k in range(1, 6)))
    c.check("s_1 of {0, 2}", lambda: _close(average_centroid_distance([[0.0], [2.0]], 1), 2.0))
    c.check("s_2 of {0, 2}", lambda: _close(average_centroid_distance([[0.0], [2.0]], 2), 0.0))
    c.check("c_v of identical vectors", lambda: configuration_variability([[4.0, 1.0]] * 9) == 0)

    def four_points():
        pts = [[0.0], [1.0], [5.0], [6.0]]
        expected = (average_centroid_distance(pts, 1) + average_centroid_distance(pts, 2)) / 2
        return _close(configuration_variability(pts), expected)

    c.check("k_max = 2 for four vectors", four_points)
    c.check("c_v of {0, 2}", lambda: _close(configuration_variability([[0.0], [2.0]]), 1.0))

    c.check("coherence of identical vectors", lambda: configuration_coherence([[2.0, 3.0]] * 4) == 1.0)
    c.check("coherence of {0, 2}", lambda: _close(configuration_coherence([[0.0], [2.0]]), 0.5))
    c.check(
        "spreading lowers coherence",
        lambda: configuration_coherence([[0.0], [2.0]]) > configuration_coherence([[0.0], [3.0]]),
    )
    rng = np.random.default_rng(3)

    def coherence_range():
        for _ in range(200):
            v = rng.normal(size=(rng.integers(2, 8), rng.integers(1, 4))) * rng.choice([1e-3, 1, 100])
            cc = configuration_coherence(v)
            if not 0 < cc < 1:
                return False
        return True

    c.check("coherence in (0, 1) for distinct vectors", coherence_range)

    b10 = UsageBounds([0.0], [10.0])
    flat = _series_from(np.full((6, 3, 1), 4.0))
    c.check("global usage of a constant", lambda: global_parameter_usage(flat, 0, 5, 5, b10) == 0)
    c.check("average usage of constants", lambda: average_parameter_usage(flat, 0, 5, 5, b10) == 0)
    full = _series_from(np.linspace(0, 10, 6)[:, None, None] * np.ones((1, 2, 1)))
    c.check("full range gives 1", lambda: _close(global_parameter_usage(full, 0, 5, 5, b10), 1.0))
    c.check("every agent sweeps the range", lambda: _close(average_parameter_usage(full, 0, 5, 5, b10), 1.0))
    pooled = _series_from(np.arange(2.0, 8.0)[:, None, None])
    c.check("pooled values 2..7", lambda: _close(global_parameter_usage(pooled, 0, 5, 5, b10), 0.5))
    two = np.zeros((6, 2, 1))
    two[:, 0, 0] = [1, 3, 2, 2, 1, 1]
    two[:, 1, 0] = [5, 5, 9, 6, 7, 5]
    c.check("agent ranges 2 and 4", lambda: _close(average_parameter_usage(_series_from(two), 0, 5, 5, b10), 0.3))

    def global_dominates():
        for _ in range(200):
            data = rng.uniform(0, 10, size=(8, rng.integers(1, 6), 1))
            s = _series_from(data)
            if global_parameter_usage(s, 0, 7, 5, b10) < average_parameter_usage(s, 0, 7, 5, b10) - TOL:
                return False
        return True

    c.check("global usage >= average usage", global_dominates)


def _transferability_checks(c: Checklist) -> None:
    c.check("E of uniform", lambda: all(_close(emergence(histogram(np.arange(n) + 0.5, n, (0, n))), 1.0) for n in (2, 7, 100)))
    c.check("E of one bin", lambda: emergence(histogram([0.2] * 9, 10, (0, 1))) == 0.0)
    c.check("E of {0.9, 0.1}", lambda: abs(emergence(histogram([0] * 9 + [1], *integer_bins(0, 1))) - 0.46900) < 5e-6)
    c.check("C(0), C(1), C(0.5)", lambda: complexity(0) == 0 and complexity(1) == 0 and _close(complexity(0.5), 1))
    x = np.arange(10.0) ** 1.5
    c.check("r(x, x)", lambda: _close(pearson(x, x), 1.0))
    c.check("r(x, -x)", lambda: _close(pearson(x, -x), -1.0))
    c.check("r with constant input", lambda: pearson(np.ones(10), x) is None)

    L = 40
    wave = 0.5 + 0.4 * np.sin(np.arange(L) / 3.0)
    sig = ComplexitySignal(np.arange(L), wave)
    params = TransferabilityParams(L=L)
    c.check("T of identical signals", lambda: _close(transferability(sig, sig, L - 1, params), 0.0))
    flat = ComplexitySignal(np.arange(L), np.full(L, 0.3))
    c.check("T with a constant window", lambda: transferability(sig, flat, L - 1, params) == 1.0)

    def monte_carlo():
        # mean T of independent uniform complexity series, one trial per seed
        rng = np.random.default_rng(2024)
        n = 2 * L - 1
        t = windowed_transferability(rng.random((10_000, n)), rng.random((10_000, n)), L).mean(axis=1)
        return float(np.mean(t > 0.7)) >= 0.95

    c.check("independent signals give T > 0.7", monte_carlo)

    def t_range():
        rng = np.random.default_rng(5)
        a, b = rng.random((300, 60)), rng.random((300, 60))
        b[::3] = a[::3] * 0.5
        t = windowed_transferability(a, b, L)
        return bool(np.all((t >= 0) & (t <= 1)))

    c.check("T in [0, 1]", t_range)

    c.check("identical samples give C = 0", lambda: tick_complexity([3.0] * 20, 10, (0, 10)) == 0.0)
    c.check("one sample per bin gives C = 0", lambda: _close(tick_complexity(np.arange(10) + 0.5, 10, (0, 10)), 0.0))
    p = _binary_entropy_root(0.5)

    def c_peak():
        n = 100_000
        k = round(p * n)
        return abs(tick_complexity([1.0] * k + [0.0] * (n - k), *integer_bins(0, 1)) - 1.0) < 1e-6

    c.check("E = 0.5 gives C = 1", c_peak)


def _scenario_checks(c: Checklist) -> None:
    # traffic
    def empty_network():
        w = TrafficWorld(seed=0, config=TrafficConfig(morning_tick=10**6, evening_tick=10**6), background=False)
        frames = []
        for _ in range(30):
            w.step()
            frames.append(w.configurations())
        budget = w.config.cycle_budget
        equal = all(
            int(g.max()) - int(g.min()) <= 1 and int(g.sum()) == budget for g in w.green
        )
        constant = all(np.array_equal(frames[0], f) for f in frames)
        return equal and constant

    c.check("no cars: equal split, constant configurations", empty_network)

    def single_car():
        cfg = TrafficConfig(morning_tick=10**6, evening_tick=10**6, travel_time=3, adaptation_period=10**6)
        w = TrafficWorld(seed=0, config=cfg, background=False)
        src, dst = w.net.node(0, 1, 1), w.net.node(1, 2, 3)
        route = w.net.path(src, dst)
        car = w.add_car(src, dst, slot=w.net.lanes[src][0], commuter=True)
        # hold every light on the route green for the lane the car comes from
        w.phase[src] = 0
        for u, v in zip(route, route[1:]):
            slot = next(s for s, n in w.net.neighbours[v].items() if n == u)
            w.phase[v] = w.net.lanes[v].index(slot)
        w.remaining = [10**9] * w.net.n_nodes
        while w.arrived_commuters == 0 and w.tick < 500:
            w.step()
        hops = int(w.net.hop_distances(dst)[src])
        # the car leaves its origin during the first step
        return car == 0 and hops == len(route) - 1 and w.tick == 1 + hops * cfg.travel_time

    c.check("single car arrives after path length", single_car)

    def rush_count():
        cfg = TrafficConfig(morning_tick=3)
        w = TrafficWorld(seed=1, config=cfg)
        for _ in range(3):
            w.step()
        return w.alive_commuters == cfg.rush_cars and w.car_count == cfg.background_cars + cfg.rush_cars

    c.check("rush hour adds exactly 500 commuters", rush_count)

    w = TrafficWorld(seed=0, background=False)
    eb = w.environment_binning
    c.check("empty network: C = 0", lambda: tick_complexity(np.zeros(30), eb.bin_count, eb.value_range) == 0.0)
    c.check("equal queues: C = 0", lambda: tick_complexity(np.full(30, 4.0), eb.bin_count, eb.value_range) == 0.0)

    def mixed_queues():
        h = histogram([0, 0, 1, 3], *integer_bins(0, 3))
        e = -(0.5 * math.log(0.5) + 2 * 0.25 * math.log(0.25)) / math.log(4)
        return _close(h.probabilities(), [0.5, 0.25, 0, 0.25]) and _close(
            tick_complexity([0, 0, 1, 3], *integer_bins(0, 3)), 4 * e * (1 - e)
        )

    c.check("queues {0, 0, 1, 3}", mixed_queues)

    # flocking
    cfg = FlockConfig()

    def lonely():
        pos = np.array([[10.0, 10.0], [100.0, 100.0]])
        head = np.array([[1.0, 0.0], [0.0, 1.0]])
        return _close(flocking_headings(pos, head, cfg), head)

    c.check("birds without neighbours keep heading", lonely)

    def bisector():
        align_only = FlockConfig(cohesion_weight=0.0, avoidance_weight=0.0)
        pos = np.array([[10.0, 10.0], [10.0, 10.0]])
        head = np.array([[1.0, 0.0], [0.0, 1.0]])
        new = flocking_headings(pos, head, align_only)
        return _close(new, np.full((2, 2), 1 / math.sqrt(2)))

    c.check("co-located birds turn to the bisector", bisector)

    fb = FlockWorld(seed=0).environment_binning
    c.check("parallel flock: C = 0", lambda: tick_complexity(np.full(50, 1.2), fb.bin_count, fb.value_range) == 0.0)
    c.check(
        "headings across all buckets: C = 0",
        lambda: _close(tick_complexity((np.arange(100) + 0.5) * 2 * math.pi / 100, fb.bin_count, fb.value_range), 0.0),
    )

    def frozen():
        still = FlockConfig(speed=0.0, alignment_weight=0.0, cohesion_weight=0.0, avoidance_weight=0.0, shot_tick=10**6)
        world = FlockWorld(seed=4, config=still)
        env, sys_ = [], []
        for _ in range(45):
            world.step()
            e, s = world.observables()
            env.append(e)
            sys_.append(s)
        sc = complexity_signal(sys_, fb.bin_count, fb.value_range, 1)
        ec = complexity_signal(env, fb.bin_count, fb.value_range, 1)
        return np.all(transferability_series(sc, ec, TransferabilityParams()).values == 1.0)

    c.check("frozen flock: T = 1", frozen)

    # life
    block = np.zeros((6, 6), dtype=np.int8)
    block[2:4, 2:4] = 1
    c.check("block is still", lambda: np.array_equal(life_step(life_step(block)), block))
    blinker = np.zeros((5, 5), dtype=np.int8)
    blinker[2, 1:4] = 1
    c.check(
        "blinker has period 2",
        lambda: np.array_equal(life_step(blinker), blinker.T) and np.array_equal(life_step(life_step(blinker)), blinker),
    )
    c.check("empty grid stays empty", lambda: not life_step(np.zeros((8, 8), dtype=np.int8)).any())
    lb = integer_bins(0, 1)
    c.check("dead grid: C = 0", lambda: tick_complexity(np.zeros(2500), *lb) == 0.0)
    c.check("half alive: C = 0", lambda: _close(tick_complexity(np.r_[np.ones(1250), np.zeros(1250)], *lb), 0.0))
    c.check(
        "11% alive: C close to 1",
        lambda: abs(_binary_entropy_root() - 0.11) < 5e-3
        and tick_complexity(np.r_[np.ones(275), np.zeros(2225)], *lb) > 0.999,
    )


def _peak_checks(c: Checklist) -> None:
    flat = MetricSeries.from_arrays("m", range(1000), np.full(1000, 2.0))
    c.check("constant series has no peaks", lambda: detect_peaks(flat, (0, 199)).peak_ticks == [])
    spike = np.full(1000, 2.0)
    spike[600] = 12.0
    c.check(
        "one spike", lambda: detect_peaks(MetricSeries.from_arrays("m", range(1000), spike), (0, 199)).peak_ticks == [600]
    )
    rng = np.random.default_rng(8)
    noisy = rng.normal(0, 1, 1000)
    noisy[[250, 750]] += 25
    report = detect_peaks(MetricSeries.from_arrays("m", range(1000), noisy), (0, 249 - 1), [(250, 320), (750, 820)])
    c.check("two injected spikes", lambda: report.verdicts == [True, True])


def unit_properties() -> Checklist:
    c = Checklist()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for group in (_core_checks, _stability_checks, _variability_usage_checks, _transferability_checks,
                      _scenario_checks, _peak_checks):
            group(c)
    return c


# -- criterion 2 ------------------------------------------------------------


def _partitions(n: int, k: int):
    """All partitions of ``range(n)`` into exactly ``k`` labelled-by-first-use blocks."""
    def grow(labels, used):
        if len(labels) == n:
            if used == k:
                yield labels
            return
        for j in range(min(used + 1, k)):
            yield from grow(labels + [j], max(used, j + 1))

    yield from grow([], 0)


def exhaustive_average_centroid_distance(points, k: int) -> float:
    """s_k over the minimum-SSE partition of the distinct points, by enumeration."""
    pts, counts = np.unique(np.asarray(points, dtype=float), axis=0, return_counts=True)
    if len(pts) <= k:
        return 0.0
    best_sse, best = math.inf, 0.0
    for labels in _partitions(len(pts), k):
        lab = np.array(labels)
        sse = dist = 0.0
        for j in range(k):
            member = pts[lab == j]
            w = counts[lab == j]
            centre = np.average(member, axis=0, weights=w)
            sse += float(np.sum(w * np.sum((member - centre) ** 2, axis=1)))
            dist += float(np.sum(w * np.linalg.norm(member - centre, axis=1)))
        if sse < best_sse:
            best_sse, best = sse, dist / k
    return best


def brute_force_life_step(grid: np.ndarray) -> np.ndarray:
    n, m = grid.shape
    out = np.zeros_like(grid)
    for r in range(n):
        for col in range(m):
            alive = sum(
                grid[(r + dr) % n, (col + dc) % m]
                for dr in (-1, 0, 1)
                for dc in (-1, 0, 1)
                if (dr, dc) != (0, 0)
            )
            out[r, col] = 1 if alive == 3 or (grid[r, col] == 1 and alive == 2) else 0
    return out


def oracle_equivalence(cases: int = 300, grids: int = 100) -> Checklist:
    c = Checklist()
    rng = np.random.default_rng(99)
    mismatches = []
    for case in range(cases):
        m, d = int(rng.integers(1, 7)), int(rng.integers(1, 3))
        pts = rng.normal(size=(m, d)) * rng.choice([0.1, 1.0, 10.0])
        if m > 2 and case % 4 == 0:
            pts[-1] = pts[0]  # repeated vectors
        for k in range(1, m + 1):
            got = average_centroid_distance(pts, k, seed=case)
            want = exhaustive_average_centroid_distance(pts, k)
            if abs(got - want) > TOL:
                mismatches.append(f"case {case} k={k}: {got!r} vs {want!r}")
    c.check(f"clustering matches enumeration ({cases} point sets)", lambda: not mismatches)
    c.failures.extend(mismatches[:5])

    bad = [i for i in range(grids) if not np.array_equal(
        life_step(g := (rng.random((10, 10)) < rng.uniform(0.1, 0.9)).astype(np.int8)), brute_force_life_step(g))]
    c.check(f"life step matches neighbour counting ({grids} grids)", lambda: not bad)
    return c


# -- criteria 3 to 7 --------------------------------------------------------


class _Runs:
    """Cache of default-parameter runs keyed by (scenario, seed)."""

    def __init__(self):
        self.results: dict[tuple[str, int], RunResult] = {}
        self.seconds: dict[str, float] = {}

    def get(self, scenario: str, seed: int) -> RunResult:
        key = (scenario, seed)
        if key not in self.results:
            start = time.perf_counter()
            self.results[key] = run(RunConfig(scenario, seed=seed))
            self.seconds[scenario] = self.seconds.get(scenario, 0.0) + time.perf_counter() - start
        return self.results[key]


def _traffic_disturbances(runs: _Runs, seeds) -> tuple[bool, str, list[str]]:
    good, notes = 0, []
    for seed in seeds:
        reports = disturbance_reports(runs.get("traffic", seed))
        hits = sum(all(r.verdicts) for r in reports.values())
        good += hits >= 4
        if hits < 4:
            notes.append(f"seed {seed}: {hits}/5 metrics flag both rush hours")
    secs = runs.seconds.get("traffic", 0.0)
    ok = good >= _need(len(seeds)) and secs < 120
    return ok, f"{good}/{len(seeds)} seeds with >=4/5 metrics flagging both rush hours; runs took {secs:.0f}s (limit 120s)", notes


def _traffic_transferability(runs: _Runs, seeds) -> tuple[bool, str, list[str]]:
    good, notes, means = 0, [], []
    for seed in seeds:
        t = np.asarray(runs.get("traffic", seed).series["transferability"].values)
        mean, frac = float(t.mean()), float(np.mean(t > 0.5))
        means.append(mean)
        ok = 0.6 <= mean <= 0.95 and frac >= 0.9
        good += ok
        if not ok:
            notes.append(f"seed {seed}: mean T {mean:.3f}, {frac:.1%} above 0.5")
    return good >= _need(len(seeds)), f"{good}/{len(seeds)} seeds in band; mean T over seeds {np.mean(means):.3f}", notes


def _flocking(runs: _Runs, seeds) -> tuple[bool, str, list[str]]:
    good, notes, means = 0, [], []
    for seed in seeds:
        result = runs.get("flocking", seed)
        reports = disturbance_reports(result, ("stability", "average_usage"))
        mean = float(np.mean(result.series["transferability"].values))
        means.append(mean)
        ok = all(all(r.verdicts) for r in reports.values()) and 0.25 <= mean <= 0.60
        good += ok
        if not ok:
            flags = ", ".join(f"{m} {'hit' if all(r.verdicts) else 'miss'}" for m, r in reports.items())
            notes.append(f"seed {seed}: {flags}, mean T {mean:.3f}")
    return good >= _need(len(seeds)), f"{good}/{len(seeds)} seeds pass; mean T over seeds {np.mean(means):.3f}", notes


def _life(runs: _Runs, seeds) -> tuple[bool, str, list[str]]:
    good, notes, means = 0, [], []
    for seed in seeds:
        r = runs.get("life", seed)
        coh, var, avg = r.metric("coherence"), r.metric("variability"), r.metric("average_usage")
        mean = float(np.mean(r.series["transferability"].values))
        means.append(mean)
        conditions = {
            "global usage always 1": bool(np.all(np.asarray(r.metric("global_usage").values) == 1.0)),
            "coherence rises": coh.value_at(900) > coh.value_at(50),
            "coherence below 1": max(coh.values) < 1.0,
            "variability falls": var.value_at(900) < var.value_at(50),
            "average usage falls": avg.value_at(900) < avg.value_at(50),
            "mean T in [0.25, 0.60]": 0.25 <= mean <= 0.60,
        }
        ok = all(conditions.values())
        good += ok
        if not ok:
            missed = ", ".join(k for k, v in conditions.items() if not v)
            notes.append(f"seed {seed}: {missed} (mean T {mean:.3f})")
    secs = runs.seconds.get("life", 0.0)
    ok = good >= _need(len(seeds)) and secs < 60
    detail = f"{good}/{len(seeds)} seeds pass; mean T over seeds {np.mean(means):.3f}; runs took {secs:.0f}s (limit 60s)"
    return ok, detail, notes


def _determinism(scenarios=("traffic", "flocking", "life"), seed: int = 0) -> tuple[bool, str, list[str]]:
    notes = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in scenarios:
            dirs = [Path(tmp) / f"{name}_{i}" for i in (0, 1)]
            for d in dirs:
                run(RunConfig(name, seed=seed, out=d))
            files = sorted(p.name for p in dirs[0].iterdir())
            _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
            if mismatch or errors or files != sorted(p.name for p in dirs[1].iterdir()):
                notes.append(f"{name}: differing files {mismatch + errors}")
    return not notes, f"{len(scenarios)} scenarios run twice with seed {seed}", notes


TITLES = {
    1: "metric unit properties",
    2: "oracle equivalence",
    3: "traffic disturbances",
    4: "traffic transferability",
    5: "flocking disturbance",
    6: "game of life",
    7: "determinism",
}


def run_criterion(number: int, n_seeds: int = 10, runs: _Runs | None = None) -> CriterionResult:
    runs = runs or _Runs()
    seeds = range(n_seeds)
    start = time.perf_counter()
    if number in (1, 2):
        checks = unit_properties() if number == 1 else oracle_equivalence()
        elapsed = time.perf_counter() - start
        limit = 1.0 if number == 1 else 10.0
        passed = not checks.failures and elapsed < limit
        detail = f"{checks.total - len(checks.failures)}/{checks.total} checks pass (limit {limit:.0f}s)"
        return CriterionResult(number, TITLES[number], passed, detail, elapsed, checks.failures)
    step = {
        3: lambda: _traffic_disturbances(runs, seeds),
        4: lambda: _traffic_transferability(runs, seeds),
        5: lambda: _flocking(runs, seeds),
        6: lambda: _life(runs, seeds),
        7: _determinism,
    }[number]
    passed, detail, notes = step()
    return CriterionResult(number, TITLES[number], passed, detail, time.perf_counter() - start, notes)


def run_all(n_seeds: int = 10, only=None) -> list[CriterionResult]:
    runs = _Runs()
    numbers = sorted(only) if only else sorted(TITLES)
    unknown = set(numbers) - set(TITLES)
    if unknown:
        raise ValueError(f"unknown criteria {sorted(unknown)}")
    return [run_criterion(n, n_seeds, runs) for n in numbers]
