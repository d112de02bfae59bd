"""Rush-hour traffic on two 3x5 street grids joined by three bridges.

Each intersection is an agent. It runs a fixed-length signal cycle in which
its incoming lanes get green one after another; every adaptation period it
re-splits the cycle in proportion to the mean queue it saw on each lane
(plus a small prior count), keeping the old split unless some lane's green
time would move by at least ``deadband`` ticks. A green lane releases up
to ``service_rate`` cars per tick and each street takes ``travel_time``
ticks to drive. The configuration vector holds the red time of each approach
(north, east, south, west); approaches without a street are red for the
whole cycle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..adaptation import StabilityParams, UsageBounds
from ..core import integer_bins
from .base import ObservableBinning, Scenario

NORTH, EAST, SOUTH, WEST = range(4)
OPPOSITE = (SOUTH, WEST, NORTH, EAST)


@dataclass
class TrafficConfig:
    rows: int = 3
    cols: int = 5
    background_cars: int = 250
    rush_cars: int = 500
    morning_tick: int = 250
    evening_tick: int = 750
    cycle_budget: int = 20
    adaptation_period: int = 10
    min_green: int = 1
    queue_prior: float = 10.0
    deadband: int = 3
    service_rate: int = 2
    travel_time: int = 10
    max_queue_bin: int = 40
    # "crossing": cars waiting per intersection; "lane": per incoming lane
    environment: str = "crossing"


class StreetNetwork:
    """Two grids side by side; row r of the left grid's east edge meets row r of the right grid's west edge."""

    def __init__(self, rows: int = 3, cols: int = 5):
        self.rows, self.cols = rows, cols
        self.n_nodes = 2 * rows * cols
        self.neighbours: list[dict[int, int]] = [dict() for _ in range(self.n_nodes)]
        for island in (0, 1):
            for r in range(rows):
                for c in range(cols):
                    v = self.node(island, r, c)
                    if r > 0:
                        self._link(v, NORTH, self.node(island, r - 1, c))
                    if c > 0:
                        self._link(v, WEST, self.node(island, r, c - 1))
        for r in range(rows):
            self._link(self.node(1, r, 0), WEST, self.node(0, r, cols - 1))
        # lanes[v] lists the approach slots of v that have a street, in slot order
        self.lanes = [sorted(nb) for nb in self.neighbours]
        self._next_hop = self._shortest_path_table()

    def node(self, island: int, r: int, c: int) -> int:
        return island * self.rows * self.cols + r * self.cols + c

    def island(self, v: int) -> int:
        return v // (self.rows * self.cols)

    def _link(self, v: int, slot: int, u: int) -> None:
        self.neighbours[v][slot] = u
        self.neighbours[u][OPPOSITE[slot]] = v

    def hop_distances(self, target: int) -> np.ndarray:
        dist = np.full(self.n_nodes, -1, dtype=np.int64)
        dist[target] = 0
        frontier = deque([target])
        while frontier:
            v = frontier.popleft()
            for u in self.neighbours[v].values():
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    frontier.append(u)
        return dist

    def _shortest_path_table(self) -> np.ndarray:
        nxt = np.full((self.n_nodes, self.n_nodes), -1, dtype=np.int64)
        for target in range(self.n_nodes):
            dist = self.hop_distances(target)
            for v in range(self.n_nodes):
                if v == target:
                    continue
                nxt[v, target] = min(u for u in self.neighbours[v].values() if dist[u] == dist[v] - 1)
        return nxt

    def next_hop(self, v: int, target: int) -> int:
        """Neighbour of ``v`` on a hop-count shortest path to ``target`` (lowest id on ties)."""
        return int(self._next_hop[v, target])

    def path(self, source: int, target: int) -> list[int]:
        p = [source]
        while p[-1] != target:
            p.append(self.next_hop(p[-1], target))
        return p


def split_cycle(mean_queues, budget: int, min_green: int) -> np.ndarray:
    """Green ticks per lane: ``min_green`` each, the rest proportional to queue (largest remainder)."""
    q = np.asarray(mean_queues, dtype=float)
    n = q.size
    spare = budget - n * min_green
    if spare < 0:
        raise ValueError("cycle budget too small for the minimum green times")
    share = np.full(n, spare / n) if q.sum() <= 0 else spare * q / q.sum()
    green = np.floor(share).astype(np.int64)
    rest = spare - int(green.sum())
    order = np.lexsort((np.arange(n), -(share - green)))  # largest remainder, lowest lane first
    green[order[:rest]] += 1
    return green + min_green


class TrafficWorld(Scenario):
    name = "traffic"
    default_ticks = 1200
    stability = StabilityParams(M=15, L=15, epsilon=2.0)

    def __init__(self, seed: int = 0, config: TrafficConfig | None = None, background: bool = True):
        super().__init__(seed)
        self.config = cfg = config or TrafficConfig()
        self.net = net = StreetNetwork(cfg.rows, cfg.cols)
        self.homesteads = [net.node(0, r, 0) for r in range(cfg.rows)]
        self.workplaces = [net.node(1, r, cfg.cols - 1) for r in range(cfg.rows)]
        self.disturbances = (
            (cfg.morning_tick, cfg.morning_tick + 70),
            (cfg.evening_tick, cfg.evening_tick + 70),
        )

        self.lane_ids: list[tuple[int, int]] = [(v, s) for v in range(net.n_nodes) for s in net.lanes[v]]
        self._lane_index = {lane: i for i, lane in enumerate(self.lane_ids)}
        self.queues: list[deque] = [deque() for _ in self.lane_ids]

        self.green = [
            split_cycle(np.zeros(len(net.lanes[v])), cfg.cycle_budget, cfg.min_green)
            for v in range(net.n_nodes)
        ]
        self.phase = [0] * net.n_nodes
        self.remaining = [int(g[0]) for g in self.green]
        self._queue_sums = np.zeros(len(self.lane_ids))
        # cars driving between intersections, keyed by the tick they join a queue
        self._transit: dict[int, list[tuple[int, int, int]]] = {}
        self._samples = 0

        self.destination: list[int] = []
        self.commuter: list[bool] = []
        self.alive_commuters = 0
        self.arrived_commuters = 0
        if background:
            for _ in range(cfg.background_cars):
                v = int(self.rng.integers(net.n_nodes))
                self.add_car(v, self._random_destination(v))

    # -- cars --------------------------------------------------------------

    def _random_destination(self, current: int) -> int:
        d = int(self.rng.integers(self.net.n_nodes - 1))
        return d + 1 if d >= current else d

    def add_car(self, node: int, destination: int, slot: int | None = None, commuter: bool = False) -> int:
        """Queue a new car on an incoming lane of ``node`` (a random lane unless ``slot`` is given)."""
        car = len(self.destination)
        self.destination.append(destination)
        self.commuter.append(commuter)
        slots = self.net.lanes[node]
        if slot is None:
            slot = slots[int(self.rng.integers(len(slots)))]
        self.queues[self._lane_index[(node, slot)]].append(car)
        if commuter:
            self.alive_commuters += 1
        return car

    def _spawn_rush(self, origins, targets) -> None:
        # a commuter leaves its origin at once and queues at the first
        # intersection on its route
        for _ in range(self.config.rush_cars):
            home = origins[int(self.rng.integers(len(origins)))]
            work = targets[int(self.rng.integers(len(targets)))]
            w = self.net.next_hop(home, work)
            self.add_car(w, work, slot=OPPOSITE[self._slot_towards(home, w)], commuter=True)

    @property
    def car_count(self) -> int:
        waiting = sum(len(q) for q in self.queues)
        return waiting + sum(len(cars) for cars in self._transit.values())

    def car_positions(self) -> dict[int, int]:
        """Node each car is waiting at."""
        return {car: self.lane_ids[i][0] for i, q in enumerate(self.queues) for car in q}

    # -- simulation --------------------------------------------------------

    def step(self) -> None:
        cfg = self.config
        net = self.net
        new_tick = self.tick + 1
        if new_tick == cfg.morning_tick:
            self._spawn_rush(self.homesteads, self.workplaces)
        if new_tick == cfg.evening_tick:
            self._spawn_rush(self.workplaces, self.homesteads)

        for car, w, slot in self._transit.pop(new_tick, ()):
            if w == self.destination[car]:
                if self.commuter[car]:
                    self.alive_commuters -= 1
                    self.arrived_commuters += 1
                    continue
                self.destination[car] = self._random_destination(w)
            self.queues[self._lane_index[(w, slot)]].append(car)

        due = new_tick + cfg.travel_time
        for v in range(net.n_nodes):
            slot = net.lanes[v][self.phase[v]]
            q = self.queues[self._lane_index[(v, slot)]]
            for _ in range(min(cfg.service_rate, len(q))):
                car = q.popleft()
                w = net.next_hop(v, self.destination[car])
                self._transit.setdefault(due, []).append((car, w, OPPOSITE[self._slot_towards(v, w)]))

        for v in range(net.n_nodes):
            self.remaining[v] -= 1
            if self.remaining[v] <= 0:
                self.phase[v] = (self.phase[v] + 1) % len(net.lanes[v])
                self.remaining[v] = int(self.green[v][self.phase[v]])

        self._queue_sums += self.queue_lengths()
        self._samples += 1
        if new_tick % cfg.adaptation_period == 0:
            self._adapt()
        self.tick = new_tick

    def _slot_towards(self, v: int, w: int) -> int:
        for slot, u in self.net.neighbours[v].items():
            if u == w:
                return slot
        raise ValueError(f"{w} is not adjacent to {v}")

    def _adapt(self) -> None:
        cfg = self.config
        mean_q = self._queue_sums / max(self._samples, 1)
        start = 0
        for v in range(self.net.n_nodes):
            n = len(self.net.lanes[v])
            g = split_cycle(mean_q[start : start + n] + cfg.queue_prior, cfg.cycle_budget, cfg.min_green)
            start += n
            if np.max(np.abs(g - self.green[v])) < cfg.deadband:
                continue
            self.green[v] = g
            self.remaining[v] = min(self.remaining[v], int(g[self.phase[v]]))
        self._queue_sums[:] = 0
        self._samples = 0

    # -- observation -------------------------------------------------------

    def queue_lengths(self) -> np.ndarray:
        return np.array([len(q) for q in self.queues], dtype=float)

    def red_times(self) -> np.ndarray:
        budget = self.config.cycle_budget
        return np.concatenate([budget - g for g in self.green]).astype(float)

    @property
    def n_agents(self) -> int:
        return self.net.n_nodes

    @property
    def dimension(self) -> int:
        return 4

    @property
    def bounds(self) -> UsageBounds:
        b = float(self.config.cycle_budget)
        return UsageBounds([0.0] * 4, [b] * 4)

    @property
    def environment_binning(self) -> ObservableBinning:
        return ObservableBinning(*integer_bins(0, self.config.max_queue_bin))

    @property
    def system_binning(self) -> ObservableBinning:
        return ObservableBinning(*integer_bins(0, self.config.cycle_budget))

    def configurations(self) -> np.ndarray:
        budget = float(self.config.cycle_budget)
        out = np.full((self.net.n_nodes, 4), budget)
        for v in range(self.net.n_nodes):
            out[v, self.net.lanes[v]] = budget - self.green[v]
        return out

    def waiting_per_crossing(self) -> np.ndarray:
        q = self.queue_lengths()
        owner = np.array([v for v, _ in self.lane_ids])
        return np.bincount(owner, weights=q, minlength=self.net.n_nodes)

    def observables(self) -> tuple[np.ndarray, np.ndarray]:
        env = self.queue_lengths() if self.config.environment == "lane" else self.waiting_per_crossing()
        return env, self.red_times()
