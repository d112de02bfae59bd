"""Emergence, complexity and transferability between system and environment.

Each tick's observable is binned into a histogram; its normalised Shannon
entropy is the emergence E, and C = 4 E (1 - E) is the complexity. The
transferability at a tick is 1 - |r| where r is the Pearson correlation of
the system and environment complexity signals over a trailing window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Histogram, MetricSeries, WarmUpError, bin_indices


@dataclass(frozen=True)
class TransferabilityParams:
    L: int = 40
    bin_count: int = 100

    def __post_init__(self):
        if self.L < 3:
            raise ValueError("correlation window needs L >= 3")
        if self.bin_count < 2:
            raise ValueError("need at least 2 bins")


@dataclass
class ComplexitySignal:
    ticks: np.ndarray
    values: np.ndarray
    source: str = "system"
    bin_count: int = 0

    def __post_init__(self):
        self.ticks = np.asarray(self.ticks, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.ticks.shape != self.values.shape:
            raise ValueError("ticks and values differ in length")
        if np.any(np.diff(self.ticks) != 1):
            raise ValueError("complexity ticks must be consecutive")
        if np.any((self.values < 0) | (self.values > 1)):
            raise ValueError("complexity values must lie in [0, 1]")

    def window(self, tick: int, length: int) -> np.ndarray:
        if self.ticks.size == 0:
            raise WarmUpError(f"{self.source} complexity signal is empty")
        start = tick - length + 1 - int(self.ticks[0])
        stop = tick + 1 - int(self.ticks[0])
        if start < 0 or stop > self.ticks.size:
            raise WarmUpError(
                f"{self.source} complexity does not cover [{tick - length + 1}, {tick}]"
            )
        return self.values[start:stop]


def emergence(h: Histogram) -> float:
    """Shannon entropy normalised by log(bin_count)."""
    if h.total == 0:
        raise ValueError("emergence of an empty histogram")
    if h.bin_count == 1:
        return 0.0
    p = h.counts[h.counts > 0] / h.total
    e = float(-np.sum(p * np.log(p)) / math.log(h.bin_count))
    return min(max(e, 0.0), 1.0)


def complexity(e: float) -> float:
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"emergence must lie in [0, 1], got {e}")
    return 4.0 * e * (1.0 - e)


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation, or None when either input has zero variance."""
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape:
        raise ValueError("pearson inputs differ in length")
    if a.size < 2:
        raise ValueError("pearson needs at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    sa = float(np.dot(da, da))
    sb = float(np.dot(db, db))
    # relative guard: a window of identical floats can leave rounding residue
    if sa <= 1e-24 * max(1.0, float(np.dot(a, a))) or sb <= 1e-24 * max(1.0, float(np.dot(b, b))):
        return None
    r = float(np.dot(da, db) / math.sqrt(sa * sb))
    return min(max(r, -1.0), 1.0)


def windowed_transferability(system, environment, L: int) -> np.ndarray:
    """``1 - |r|`` over every trailing window of length ``L``.

    Inputs have shape ``(..., n)`` and are aligned tick by tick; the result
    has shape ``(..., n - L + 1)``, entry ``i`` covering samples ``i .. i+L-1``.
    Windows where either side has zero variance give 1.
    """
    from numpy.lib.stride_tricks import sliding_window_view

    a = sliding_window_view(np.asarray(system, dtype=float), L, axis=-1)
    b = sliding_window_view(np.asarray(environment, dtype=float), L, axis=-1)
    da = a - a.mean(axis=-1, keepdims=True)
    db = b - b.mean(axis=-1, keepdims=True)
    sa = np.einsum("...i,...i->...", da, da)
    sb = np.einsum("...i,...i->...", db, db)
    flat = (sa <= 1e-24 * np.maximum(1.0, np.einsum("...i,...i->...", a, a))) | (
        sb <= 1e-24 * np.maximum(1.0, np.einsum("...i,...i->...", b, b))
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.einsum("...i,...i->...", da, db) / np.sqrt(sa * sb)
    return np.where(flat, 1.0, 1.0 - np.clip(np.abs(r), 0.0, 1.0))


def transferability(
    system: ComplexitySignal, environment: ComplexitySignal, tick: int, params: TransferabilityParams
) -> float:
    x = system.window(tick, params.L)
    y = environment.window(tick, params.L)
    r = pearson(x, y)
    if r is None:
        return 1.0
    return 1.0 - abs(r)


def tick_complexity(values, bin_count: int, value_range: tuple[float, float]) -> float:
    idx = bin_indices(values, bin_count, *value_range)
    if idx.size == 0:
        raise ValueError("emergence of an empty histogram")
    return complexity(emergence(Histogram(np.bincount(idx, minlength=bin_count))))


def complexity_signal(
    observations: Iterable,
    bin_count: int,
    value_range: tuple[float, float],
    start_tick: int = 0,
    source: str = "system",
) -> ComplexitySignal:
    """Per-tick complexity of an observable.

    ``observations`` yields one sequence of samples per consecutive tick,
    starting at ``start_tick``; all samples of a tick are pooled into one
    histogram. Discrete observables use ``core.integer_bins`` for one bin per
    value.
    """
    values = [tick_complexity(obs, bin_count, value_range) for obs in observations]
    ticks = np.arange(start_tick, start_tick + len(values))
    return ComplexitySignal(ticks, np.array(values), source=source, bin_count=bin_count)


def transferability_series(
    system: ComplexitySignal, environment: ComplexitySignal, params: TransferabilityParams
) -> MetricSeries:
    first = max(int(system.ticks[0]), int(environment.ticks[0])) + params.L - 1
    last = min(int(system.ticks[-1]), int(environment.ticks[-1]))
    ticks = np.arange(first, last + 1)
    if ticks.size == 0:
        return MetricSeries("transferability", {"L": params.L, "bin_count": params.bin_count})
    lo = first - params.L + 1
    x = system.values[lo - system.ticks[0] : last + 1 - system.ticks[0]]
    y = environment.values[lo - environment.ticks[0] : last + 1 - environment.ticks[0]]
    values = windowed_transferability(x, y, params.L)
    return MetricSeries.from_arrays("transferability", ticks, values, L=params.L, bin_count=params.bin_count)
