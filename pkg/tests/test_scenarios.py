import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasometrics.acceptance import brute_force_life_step
from sasometrics.core import WarmUpError
from sasometrics.scenarios import (
    FlockConfig,
    FlockWorld,
    LifeWorld,
    StreetNetwork,
    TrafficConfig,
    TrafficWorld,
    flocking_headings,
    life_step,
    split_cycle,
)
from sasometrics.scenarios.traffic import OPPOSITE

QUIET = dict(morning_tick=10**6, evening_tick=10**6)


# -- traffic ------------------------------------------------------------------


def bfs(net, source):
    dist = {source: 0}
    todo = deque([source])
    while todo:
        v = todo.popleft()
        for u in net.neighbours[v].values():
            if u not in dist:
                dist[u] = dist[v] + 1
                todo.append(u)
    return dist


def test_network_shape():
    net = StreetNetwork()
    assert net.n_nodes == 30
    degrees = sorted(len(l) for l in net.lanes)
    # corners have 2 streets, bridge ends gain one
    assert degrees.count(4) == 2 * 3 + 2 * 1
    bridges = [(v, u) for v in range(15) for s, u in net.neighbours[v].items() if u >= 15]
    assert bridges == [(4, 15), (9, 20), (14, 25)]
    for v in range(net.n_nodes):
        for s, u in net.neighbours[v].items():
            assert net.neighbours[u][OPPOSITE[s]] == v


def test_routes_follow_shortest_paths():
    net = StreetNetwork()
    for target in (0, 17, 29):
        oracle = bfs(net, target)
        assert net.hop_distances(target).tolist() == [oracle[v] for v in range(30)]
        for v in range(30):
            assert len(net.path(v, target)) - 1 == oracle[v]


@given(st.lists(st.floats(0, 100), min_size=1, max_size=4), st.integers(4, 40))
def test_split_cycle_conserves_budget(queues, budget):
    g = split_cycle(queues, budget, 1)
    assert g.sum() == budget
    assert np.all(g >= 1)


def test_split_cycle_is_proportional():
    assert split_cycle([0, 0, 0, 0], 20, 1).tolist() == [5, 5, 5, 5]
    # 18 spare ticks split 13.5 / 4.5; the tie on remainders goes to the first lane
    assert split_cycle([30, 10], 20, 1).tolist() == [15, 5]
    with pytest.raises(ValueError):
        split_cycle([1, 1, 1], 2, 1)


def test_empty_network_keeps_equal_split():
    w = TrafficWorld(seed=0, config=TrafficConfig(**QUIET), background=False)
    first = w.configurations()
    for _ in range(40):
        w.step()
    assert np.array_equal(w.configurations(), first)
    assert all(g.max() - g.min() <= 1 for g in w.green)
    env, system = w.observables()
    assert not env.any()


def test_single_car_travel_time():
    cfg = TrafficConfig(travel_time=2, adaptation_period=10**6, **QUIET)
    w = TrafficWorld(seed=0, config=cfg, background=False)
    src, dst = 0, 29
    route = w.net.path(src, dst)
    w.add_car(src, dst, slot=w.net.lanes[src][0], commuter=True)
    w.phase[src] = 0
    for u, v in zip(route, route[1:]):
        slot = next(s for s, n in w.net.neighbours[v].items() if n == u)
        w.phase[v] = w.net.lanes[v].index(slot)
    w.remaining = [10**9] * 30
    while not w.arrived_commuters:
        w.step()
    assert w.tick == 1 + (len(route) - 1) * cfg.travel_time


def test_rush_hour_spawns_commuters():
    cfg = TrafficConfig(morning_tick=4, evening_tick=10**6)
    w = TrafficWorld(seed=2, config=cfg)
    for _ in range(4):
        w.step()
    assert w.alive_commuters == 500
    assert w.car_count == 750
    homes = set(w.homesteads)
    first_hops = {w.net.next_hop(h, t) for h in homes for t in w.workplaces}
    commuters = [c for c, node in w.car_positions().items() if w.commuter[c]]
    assert {w.car_positions()[c] for c in commuters} <= first_hops


def test_cars_are_conserved():
    cfg = TrafficConfig(morning_tick=20, evening_tick=10**6, travel_time=2)
    w = TrafficWorld(seed=5, config=cfg)
    for _ in range(300):
        w.step()
        background = w.car_count - w.alive_commuters
        assert background == 250
        assert w.alive_commuters + w.arrived_commuters == (500 if w.tick >= 20 else 0)
        for g in w.green:
            assert g.sum() == cfg.cycle_budget
    assert w.arrived_commuters > 0


def test_traffic_configuration_layout():
    w = TrafficWorld(seed=0)
    conf = w.configurations()
    assert conf.shape == (30, 4)
    corner = w.net.node(0, 0, 0)
    missing = [s for s in range(4) if s not in w.net.lanes[corner]]
    assert np.all(conf[corner, missing] == 20)
    assert np.all((conf >= 0) & (conf <= 20))


def test_traffic_determinism():
    a, b = TrafficWorld(seed=9), TrafficWorld(seed=9)
    for _ in range(60):
        a.step()
        b.step()
    assert np.array_equal(a.configurations(), b.configurations())
    assert np.array_equal(a.queue_lengths(), b.queue_lengths())


# -- flocking -----------------------------------------------------------------


def test_isolated_birds_keep_heading():
    pos = np.array([[0.0, 0.0], [75.0, 75.0]])
    head = np.array([[1.0, 0.0], [0.0, -1.0]])
    assert np.allclose(flocking_headings(pos, head, FlockConfig()), head)


def test_colocated_birds_turn_to_bisector():
    cfg = FlockConfig(cohesion_weight=0.0, avoidance_weight=0.0)
    pos = np.array([[5.0, 5.0], [5.0, 5.0]])
    head = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert np.allclose(flocking_headings(pos, head, cfg), 1 / math.sqrt(2))


def test_neighbours_across_the_seam():
    cfg = FlockConfig(cohesion_weight=1.0, alignment_weight=0.0, avoidance_weight=0.0)
    pos = np.array([[1.0, 50.0], [149.0, 50.0]])
    head = np.array([[0.0, 1.0], [0.0, 1.0]])
    new = flocking_headings(pos, head, cfg)
    # each bird steers towards the other through the wrap-around edge
    assert new[0, 0] < 0 < new[1, 0]


def test_headings_stay_unit_and_positions_wrap():
    w = FlockWorld(seed=3)
    for _ in range(520):
        w.step()
        assert np.allclose(np.linalg.norm(w.headings, axis=1), 1.0, atol=1e-9)
        assert np.all((w.positions >= 0) & (w.positions < w.config.size))
        a = w.angles()
        assert np.all((a >= 0) & (a < 2 * math.pi))


def test_shot_scatters_nearby_birds():
    w = FlockWorld(seed=1, config=FlockConfig(shot_tick=3))
    for _ in range(3):
        w.step()
    origin = w._shot_origin
    hit = w._scattered
    assert hit.any()
    away = (w.positions - w.config.speed * w.headings) - origin
    away = (away + 75.0) % 150.0 - 75.0
    cos = np.sum(away[hit] * w.headings[hit], axis=1) / np.linalg.norm(away[hit], axis=1)
    assert np.allclose(cos, 1.0)


def test_flock_observables_lag_one_tick():
    w = FlockWorld(seed=0)
    with pytest.raises(WarmUpError):
        w.observables()
    before = w.angles()
    w.step()
    env, system = w.observables()
    assert np.array_equal(env, before)
    assert np.array_equal(system, w.angles())


# -- life ---------------------------------------------------------------------


def test_still_life_and_oscillator():
    block = np.zeros((6, 6), dtype=np.int8)
    block[1:3, 1:3] = 1
    assert np.array_equal(life_step(block), block)
    blinker = np.zeros((5, 5), dtype=np.int8)
    blinker[2, 1:4] = 1
    assert np.array_equal(life_step(blinker), blinker.T)
    assert np.array_equal(life_step(life_step(blinker)), blinker)
    assert not life_step(np.zeros((7, 7), dtype=np.int8)).any()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95), st.integers(3, 12))
def test_life_step_matches_neighbour_count(seed, density, n):
    grid = (np.random.default_rng(seed).random((n, n)) < density).astype(np.int8)
    assert np.array_equal(life_step(grid), brute_force_life_step(grid))


def test_life_world():
    w = LifeWorld(seed=4)
    assert w.n_agents == 2500
    assert set(np.unique(w.configurations())) <= {0.0, 1.0}
    first = w.grid.copy()
    w.step()
    env, system = w.observables()
    assert np.array_equal(env, first.reshape(-1))
    assert np.array_equal(system, w.grid.reshape(-1))
    again = LifeWorld(seed=4)
    again.step()
    assert np.array_equal(again.grid, w.grid)
