from .base import ObservableBinning, Scenario
from .flocking import FlockConfig, FlockWorld, flocking_headings
from .life import LifeConfig, LifeWorld, life_step
from .traffic import StreetNetwork, TrafficConfig, TrafficWorld, split_cycle

SCENARIOS = {
    "traffic": (TrafficWorld, TrafficConfig),
    "flocking": (FlockWorld, FlockConfig),
    "life": (LifeWorld, LifeConfig),
}

__all__ = [
    "SCENARIOS",
    "FlockConfig",
    "FlockWorld",
    "LifeConfig",
    "LifeWorld",
    "ObservableBinning",
    "Scenario",
    "StreetNetwork",
    "TrafficConfig",
    "TrafficWorld",
    "flocking_headings",
    "life_step",
    "split_cycle",
]
