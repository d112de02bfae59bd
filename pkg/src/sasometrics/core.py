"""Shared data model: configuration time series, windows, histograms, metric series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

AgentId = Hashable


class DimensionError(ValueError):
    """A configuration vector does not match the series dimension."""


class DuplicateSampleError(ValueError):
    """A (tick, agent) pair was recorded twice."""


class WarmUpError(ValueError):
    """Not enough history for the requested window."""


@dataclass(frozen=True)
class Window:
    """Trailing window of ``length`` ticks ending (inclusive) at ``end``."""

    end: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"window length must be positive, got {self.length}")

    @property
    def start(self) -> int:
        return self.end - self.length + 1

    @property
    def valid(self) -> bool:
        return self.start >= 0

    def ticks(self) -> range:
        return range(self.start, self.end + 1)


class ConfigurationSeries:
    """Dense per-agent history of configuration vectors.

    Every agent must have exactly one sample per tick; a tick is sealed (and
    ``horizon`` advanced) once the last agent has reported. Sealed ticks are
    stored as an ``(agents, dimension)`` float array each.
    """

    def __init__(self, agents: Iterable[AgentId], dimension: int):
        self.agents: tuple = tuple(agents)
        if not self.agents:
            raise ValueError("a series needs at least one agent")
        if len(set(self.agents)) != len(self.agents):
            raise ValueError("agent identifiers must be unique")
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._index = {a: i for i, a in enumerate(self.agents)}
        self._frames: list[np.ndarray] = []
        self._pending: dict[int, np.ndarray] = {}
        self._stacked: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        """Latest sealed tick, -1 while empty."""
        return len(self._frames) - 1

    def __len__(self) -> int:
        return len(self._frames)

    def _check_vector(self, vector) -> np.ndarray:
        v = np.asarray(vector, dtype=float).reshape(-1)
        if v.shape[0] != self.dimension:
            raise DimensionError(
                f"expected a {self.dimension}-dimensional vector, got {v.shape[0]}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("configuration entries must be finite")
        return v

    def record(self, tick: int, agent: AgentId, vector) -> "ConfigurationSeries":
        if agent not in self._index:
            raise KeyError(f"unknown agent {agent!r}")
        v = self._check_vector(vector)
        idx = self._index[agent]
        if tick <= self.horizon or (tick == self.horizon + 1 and idx in self._pending):
            raise DuplicateSampleError(f"agent {agent!r} already recorded at tick {tick}")
        if tick != self.horizon + 1:
            raise ValueError(f"tick {tick} out of order, next tick is {self.horizon + 1}")
        self._pending[idx] = v
        if len(self._pending) == len(self.agents):
            frame = np.stack([self._pending[i] for i in range(len(self.agents))])
            frame.setflags(write=False)
            self._frames.append(frame)
            self._pending = {}
            self._stacked = None
        return self

    def append_tick(self, frame) -> "ConfigurationSeries":
        """Record all agents for the next tick at once from an ``(agents, dim)`` array."""
        if self._pending:
            raise ValueError("cannot append a full tick while a tick is partially recorded")
        f = np.array(frame, dtype=float)
        if f.ndim == 1 and self.dimension == 1:
            f = f[:, None]
        if f.shape != (len(self.agents), self.dimension):
            raise DimensionError(
                f"expected frame of shape {(len(self.agents), self.dimension)}, got {f.shape}"
            )
        if not np.all(np.isfinite(f)):
            raise ValueError("configuration entries must be finite")
        f.setflags(write=False)
        self._frames.append(f)
        self._stacked = None
        return self

    def query(self, tick: int, agent: AgentId) -> np.ndarray:
        idx = self._index[agent]
        if 0 <= tick <= self.horizon:
            return self._frames[tick][idx]
        if tick == self.horizon + 1 and idx in self._pending:
            return self._pending[idx]
        raise KeyError(f"no sample for agent {agent!r} at tick {tick}")

    def frame(self, tick: int) -> np.ndarray:
        """All agents' vectors at a sealed tick, shape ``(agents, dim)``."""
        if not 0 <= tick <= self.horizon:
            raise KeyError(f"tick {tick} not sealed (horizon {self.horizon})")
        return self._frames[tick]

    def as_array(self) -> np.ndarray:
        """All sealed ticks, shape ``(ticks, agents, dim)``."""
        if self._stacked is None:
            if self._frames:
                self._stacked = np.stack(self._frames)
            else:
                self._stacked = np.empty((0, len(self.agents), self.dimension))
            self._stacked.setflags(write=False)
        return self._stacked

    def slice(self, window: Window, agent: AgentId | None = None) -> np.ndarray:
        """Vectors inside ``window`` ordered by tick.

        Returns ``(length, dim)`` for a single agent, else ``(length, agents, dim)``.
        """
        if not window.valid:
            raise WarmUpError(
                f"window [{window.start}, {window.end}] starts before tick 0"
            )
        if window.end > self.horizon:
            raise WarmUpError(f"window ends at {window.end}, horizon is {self.horizon}")
        block = self.as_array()[window.start : window.end + 1]
        if agent is None:
            return block
        return block[:, self._index[agent]]

    def agent_index(self, agent: AgentId) -> int:
        return self._index[agent]


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("histogram needs at least one bin")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def bin_count(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def probabilities(self) -> np.ndarray:
        if self.total == 0:
            raise ValueError("empty histogram has no distribution")
        return self.counts / self.total


def bin_indices(values, bin_count: int, lo: float, hi: float) -> np.ndarray:
    """Bin index per value; top edge is inclusive and out-of-range values clamp."""
    if bin_count < 1:
        raise ValueError("bin_count must be at least 1")
    if not lo < hi:
        raise ValueError("histogram range needs lo < hi")
    v = np.asarray(values, dtype=float).reshape(-1)
    idx = np.floor((v - lo) / (hi - lo) * bin_count)
    return np.clip(idx, 0, bin_count - 1).astype(np.int64)


def histogram(values, bin_count: int, value_range: tuple[float, float]) -> Histogram:
    lo, hi = value_range
    idx = bin_indices(values, bin_count, lo, hi)
    return Histogram(np.bincount(idx, minlength=bin_count))


def integer_bins(lo: int, hi: int) -> tuple[int, tuple[float, float]]:
    """Bin count and range giving one bin per integer in ``[lo, hi]``."""
    if hi < lo:
        raise ValueError("need lo <= hi")
    return hi - lo + 1, (lo - 0.5, hi + 0.5)


def mean_and_variance(values) -> tuple[float, float]:
    """Mean and population (divide-by-N) variance."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("mean_and_variance of an empty sequence")
    m = float(v.mean())
    return m, float(np.mean((v - m) ** 2))


@dataclass
class MetricSeries:
    """Time-indexed scalar output of one metric, labelled by window end tick."""

    name: str
    params: dict = field(default_factory=dict)
    ticks: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def append(self, tick: int, value: float) -> None:
        if self.ticks and tick <= self.ticks[-1]:
            raise ValueError(f"ticks must increase strictly: {tick} after {self.ticks[-1]}")
        self.ticks.append(int(tick))
        self.values.append(float(value))

    @classmethod
    def from_arrays(cls, name: str, ticks: Sequence[int], values: Sequence[float], **params):
        s = cls(name, dict(params))
        for t, v in zip(ticks, values):
            s.append(t, v)
        return s

    def __len__(self) -> int:
        return len(self.ticks)

    def value_at(self, tick: int) -> float:
        i = np.searchsorted(self.ticks, tick)
        if i >= len(self.ticks) or self.ticks[i] != tick:
            raise KeyError(f"{self.name} has no value at tick {tick}")
        return self.values[i]

    def shifted(self, offset: int) -> "MetricSeries":
        """Copy with every tick moved by ``offset``, e.g. ``-(L-1)`` to label by window start."""
        return MetricSeries(self.name, dict(self.params), [t + offset for t in self.ticks], list(self.values))

    def to_csv(self) -> str:
        lines = ["tick,value"]
        lines += [f"{t},{format_value(v)}" for t, v in zip(self.ticks, self.values)]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        v = np.asarray(self.values, dtype=float)
        if v.size == 0:
            return {"mean": math.nan, "min": math.nan, "max": math.nan}
        return {"mean": float(v.mean()), "min": float(v.min()), "max": float(v.max())}


def format_value(v: float) -> str:
    return f"{v:.9g}"
