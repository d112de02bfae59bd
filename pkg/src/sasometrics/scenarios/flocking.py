"""Boids on a toroidal plane with a one-off shot that scatters nearby birds.

A bird's configuration is its heading angle in [0, 2*pi). The flock has no
outside environment, so the environment observable is the flock's headings
one tick earlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..adaptation import StabilityParams, UsageBounds
from .base import ObservableBinning, Scenario

TWO_PI = 2.0 * math.pi


@dataclass
class FlockConfig:
    n_birds: int = 50
    size: float = 150.0
    neighbour_radius: float = 20.0
    avoidance_radius: float = 5.0
    # alignment dominates so the flock turns smoothly between disturbances
    alignment_weight: float = 4.0
    cohesion_weight: float = 0.5
    avoidance_weight: float = 0.5
    speed: float = 1.0
    shot_tick: int = 500
    shot_duration: int = 2
    shot_radius: float = 50.0
    bin_count: int = 100


def _normalise(v: np.ndarray) -> np.ndarray:
    """Row-wise unit vectors; zero rows stay zero."""
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, n, out=np.zeros_like(v), where=n > 0)


def torus_offsets(positions: np.ndarray, size: float) -> np.ndarray:
    """Shortest displacement from bird i to bird j, shape (n, n, 2)."""
    d = positions[None, :, :] - positions[:, None, :]
    return (d + size / 2.0) % size - size / 2.0


def flocking_headings(positions, headings, cfg: FlockConfig) -> np.ndarray:
    """Headings after one application of alignment, cohesion and avoidance."""
    off = torus_offsets(positions, cfg.size)
    dist = np.linalg.norm(off, axis=2)
    not_self = ~np.eye(len(positions), dtype=bool)
    near = (dist <= cfg.neighbour_radius) & not_self
    close = (dist <= cfg.avoidance_radius) & not_self

    n_near = near.sum(axis=1, keepdims=True)
    n_close = close.sum(axis=1, keepdims=True)
    safe_near = np.maximum(n_near, 1)
    align = np.where(n_near > 0, near.astype(float) @ headings / safe_near, 0.0)
    cohere = _normalise(np.einsum("ij,ijk->ik", near.astype(float), off) / safe_near)
    avoid = -_normalise(np.einsum("ij,ijk->ik", close.astype(float), off) / np.maximum(n_close, 1))

    combined = _normalise(
        cfg.alignment_weight * align + cfg.cohesion_weight * cohere + cfg.avoidance_weight * avoid
    )
    turned = headings + combined
    new = _normalise(turned)
    keep = np.linalg.norm(turned, axis=1) == 0
    new[keep] = headings[keep]
    return new


class FlockWorld(Scenario):
    name = "flocking"
    default_ticks = 1000
    stability = StabilityParams(M=10, L=10, epsilon=1.0)
    first_observation_tick = 1
    # randomly placed birds need a while to gather into flocks
    baseline_start = 200

    def __init__(self, seed: int = 0, config: FlockConfig | None = None, positions=None, headings=None):
        super().__init__(seed)
        self.config = cfg = config or FlockConfig()
        n = cfg.n_birds
        if positions is None:
            positions = self.rng.uniform(0.0, cfg.size, size=(n, 2))
        if headings is None:
            angles = self.rng.uniform(0.0, TWO_PI, size=n)
            headings = np.column_stack([np.cos(angles), np.sin(angles)])
        self.positions = np.asarray(positions, dtype=float).copy()
        self.headings = _normalise(np.asarray(headings, dtype=float))
        self.target = int(self.rng.integers(n))
        self._shot_origin: np.ndarray | None = None
        self._scattered: np.ndarray | None = None
        self.previous_angles: np.ndarray | None = None
        self.disturbances = ((cfg.shot_tick, cfg.shot_tick + 40),)

    @property
    def n_agents(self) -> int:
        return len(self.positions)

    @property
    def dimension(self) -> int:
        return 1

    @property
    def bounds(self) -> UsageBounds:
        return UsageBounds([0.0], [TWO_PI])

    @property
    def environment_binning(self) -> ObservableBinning:
        return ObservableBinning(self.config.bin_count, (0.0, TWO_PI))

    @property
    def system_binning(self) -> ObservableBinning:
        return self.environment_binning

    def angles(self) -> np.ndarray:
        a = np.arctan2(self.headings[:, 1], self.headings[:, 0]) % TWO_PI
        # arctan2 of a tiny negative y can round up to exactly 2*pi
        return np.where(a >= TWO_PI, 0.0, a)

    def _shot_active(self, tick: int) -> bool:
        cfg = self.config
        return cfg.shot_tick <= tick < cfg.shot_tick + cfg.shot_duration

    def step(self) -> None:
        cfg = self.config
        self.previous_angles = self.angles()
        new_tick = self.tick + 1
        headings = flocking_headings(self.positions, self.headings, cfg)
        if self._shot_active(new_tick):
            if self._shot_origin is None:
                self._shot_origin = self.positions[self.target].copy()
                off = torus_offsets(np.vstack([self._shot_origin, self.positions]), cfg.size)[0, 1:]
                dist = np.linalg.norm(off, axis=1)
                self._scattered = (dist <= cfg.shot_radius) & (dist > 0)
            # displacement from the shot origin to each bird
            away = torus_offsets(np.vstack([self._shot_origin, self.positions]), cfg.size)[0, 1:]
            flee = _normalise(away)
            hit = self._scattered & (np.linalg.norm(flee, axis=1) > 0)
            headings[hit] = flee[hit]
        self.headings = headings
        self.positions = (self.positions + cfg.speed * headings) % cfg.size
        self.tick = new_tick

    def configurations(self) -> np.ndarray:
        return self.angles()[:, None]

    def observables(self) -> tuple[np.ndarray, np.ndarray]:
        self._require_observation_tick()
        return self.previous_angles, self.angles()
