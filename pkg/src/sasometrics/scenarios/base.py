from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..adaptation import StabilityParams, UsageBounds
from ..core import WarmUpError


@dataclass(frozen=True)
class ObservableBinning:
    """How one scenario's observables are discretised for complexity."""

    bin_count: int
    value_range: tuple[float, float]


class Scenario:
    """Uniform contract shared by the built-in simulations.

    ``tick`` starts at 0 with the initial state; ``step()`` advances it by one.
    Subclasses set the class attributes below and implement the four hooks.
    """

    name: str = ""
    default_ticks: int = 1000
    stability: StabilityParams = StabilityParams()
    # (first, last) tick windows in which a scheduled disturbance should show up
    disturbances: tuple[tuple[int, int], ...] = ()
    # first tick at which environment/system observations exist
    first_observation_tick: int = 0
    # peak-detection baselines start here, skipping start-up transients
    baseline_start: int = 0

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.tick = 0

    @property
    def agents(self) -> list:
        return list(range(self.n_agents))

    @property
    def n_agents(self) -> int:
        raise NotImplementedError

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def bounds(self) -> UsageBounds:
        raise NotImplementedError

    @property
    def environment_binning(self) -> ObservableBinning:
        raise NotImplementedError

    @property
    def system_binning(self) -> ObservableBinning:
        raise NotImplementedError

    def step(self) -> None:
        raise NotImplementedError

    def configurations(self) -> np.ndarray:
        """Current configuration vectors, shape ``(agents, dimension)``."""
        raise NotImplementedError

    def observables(self) -> tuple[np.ndarray, np.ndarray]:
        """``(environment, system)`` samples for the current tick."""
        raise NotImplementedError

    def environment_observation(self) -> np.ndarray:
        return self.observables()[0]

    def system_observation(self) -> np.ndarray:
        return self.observables()[1]

    def _require_observation_tick(self) -> None:
        if self.tick < self.first_observation_tick:
            raise WarmUpError(
                f"{self.name} observations start at tick {self.first_observation_tick}"
            )

    def baseline(self) -> tuple[int, int]:
        """Undisturbed tick range used as the reference for peak detection."""
        if not self.disturbances:
            raise ValueError(f"{self.name} schedules no disturbances")
        return self.baseline_start, self.disturbances[0][0] - 1
