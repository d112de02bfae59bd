"""Conway's Game of Life on a torus; every cell is an agent configured by its state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..adaptation import StabilityParams, UsageBounds
from ..core import integer_bins
from .base import ObservableBinning, Scenario


def life_step(grid: np.ndarray) -> np.ndarray:
    """One synchronous update with the Moore neighbourhood and wrap-around edges."""
    g = grid.astype(np.int8, copy=False)
    n = sum(
        np.roll(np.roll(g, dr, axis=0), dc, axis=1)
        for dr in (-1, 0, 1)
        for dc in (-1, 0, 1)
        if (dr, dc) != (0, 0)
    )
    return ((n == 3) | ((g == 1) & (n == 2))).astype(np.int8)


@dataclass
class LifeConfig:
    size: int = 50
    density: float = 0.5


class LifeWorld(Scenario):
    name = "life"
    default_ticks = 1000
    stability = StabilityParams(M=15, L=15, epsilon=0.05)
    first_observation_tick = 1

    def __init__(self, seed: int = 0, config: LifeConfig | None = None, grid=None):
        super().__init__(seed)
        self.config = config or LifeConfig()
        if grid is not None:
            self.grid = np.asarray(grid, dtype=np.int8).copy()
        else:
            n = self.config.size
            self.grid = (self.rng.random((n, n)) < self.config.density).astype(np.int8)
        self.previous: np.ndarray | None = None

    @property
    def n_agents(self) -> int:
        return self.grid.size

    @property
    def dimension(self) -> int:
        return 1

    @property
    def bounds(self) -> UsageBounds:
        return UsageBounds([0.0], [1.0])

    @property
    def environment_binning(self) -> ObservableBinning:
        return ObservableBinning(*integer_bins(0, 1))

    system_binning = environment_binning

    def step(self) -> None:
        self.previous = self.grid
        self.grid = life_step(self.grid)
        self.tick += 1

    def configurations(self) -> np.ndarray:
        return self.grid.reshape(-1, 1).astype(float)

    def observables(self) -> tuple[np.ndarray, np.ndarray]:
        self._require_observation_tick()
        return self.previous.reshape(-1).astype(float), self.grid.reshape(-1).astype(float)
