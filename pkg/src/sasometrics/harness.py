"""Run a scenario through every metric pipeline and write the results."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptation import (
    StabilityParams,
    coherence_series,
    stability_series,
    usage_series,
    variability_series,
)
from .core import ConfigurationSeries, MetricSeries, format_value
from .scenarios import SCENARIOS, Scenario
from .transferability import ComplexitySignal, TransferabilityParams, complexity_signal, transferability_series

log = logging.getLogger(__name__)

ADAPTATION_METRICS = ("coherence", "stability", "variability", "global_usage", "average_usage")


@dataclass
class RunConfig:
    scenario: str
    seed: int = 0
    ticks: int | None = None
    stability_M: int | None = None
    stability_L: int | None = None
    epsilon: float | None = None
    usage_L: int = 5
    transfer_L: int = 40
    bin_count: int | None = None
    scenario_overrides: dict = field(default_factory=dict)
    out: Path | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        if self.usage_L < 1 or self.transfer_L < 3:
            raise ValueError("usage_L must be >= 1 and transfer_L >= 3")

    @classmethod
    def from_params(cls, scenario: str, params: list[str] = (), **kwargs) -> "RunConfig":
        """Build a config from ``key=value`` strings.

        Keys naming a RunConfig field set that field; any other key must be a
        field of the scenario's config dataclass and is passed through.
        """
        own = {f.name: f for f in dataclasses.fields(cls)}
        scenario_fields = {f.name: f for f in dataclasses.fields(SCENARIOS[scenario][1])}
        overrides = dict(kwargs.pop("scenario_overrides", {}) or {})
        for item in params:
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep:
                raise ValueError(f"expected key=value, got {item!r}")
            if key in own and key not in ("scenario", "scenario_overrides", "out"):
                kwargs[key] = _parse_number(raw)
            elif key in scenario_fields:
                overrides[key] = _parse_number(raw)
            else:
                raise ValueError(f"unknown parameter {key!r} for scenario {scenario!r}")
        return cls(scenario=scenario, scenario_overrides=overrides, **kwargs)

    def build_scenario(self) -> Scenario:
        world_cls, config_cls = SCENARIOS[self.scenario]
        return world_cls(seed=self.seed, config=config_cls(**self.scenario_overrides))

    def stability_params(self, scenario: Scenario) -> StabilityParams:
        d = scenario.stability
        return StabilityParams(
            M=self.stability_M or d.M,
            L=self.stability_L or d.L,
            epsilon=self.epsilon if self.epsilon is not None else d.epsilon,
        )

    def transfer_params(self, scenario: Scenario) -> TransferabilityParams:
        bins = self.bin_count or scenario.system_binning.bin_count
        return TransferabilityParams(L=self.transfer_L, bin_count=max(bins, 2))


def _parse_number(raw: str):
    raw = raw.strip()
    for kind in (int, float):
        try:
            return kind(raw)
        except ValueError:
            pass
    return raw


@dataclass
class RunResult:
    config: RunConfig
    scenario: Scenario
    configurations: ConfigurationSeries
    series: dict[str, MetricSeries]
    system_complexity: ComplexitySignal
    environment_complexity: ComplexitySignal

    def metric(self, name: str) -> MetricSeries:
        """A metric series; ``global_usage``/``average_usage`` without an index average over parameters."""
        if name in self.series:
            return self.series[name]
        parts = sorted(k for k in self.series if k.startswith(name + "_"))
        if not parts:
            raise KeyError(name)
        first = self.series[parts[0]]
        mean = np.mean([self.series[k].values for k in parts], axis=0)
        return MetricSeries.from_arrays(name, first.ticks, mean, **first.params)

    def summary_lines(self) -> list[str]:
        lines = []
        for name in sorted(self.series):
            s = self.series[name].summary()
            lines.append(
                f"metric={name}, mean={format_value(s['mean'])}, "
                f"min={format_value(s['min'])}, max={format_value(s['max'])}"
            )
        return lines

    def write(self, out: Path) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name in sorted(self.series):
            path = out / f"{self.config.scenario}_{name}.csv"
            path.write_text(self.series[name].to_csv(), newline="\n")
            written.append(path)
        summary = out / f"{self.config.scenario}_summary.txt"
        summary.write_text("\n".join(self.summary_lines()) + "\n", newline="\n")
        written.append(summary)
        return written


def run(config: RunConfig) -> RunResult:
    scenario = config.build_scenario()
    ticks = config.ticks or scenario.default_ticks
    stab = config.stability_params(scenario)
    tp = config.transfer_params(scenario)
    needed = max(stab.warm_up, config.usage_L, scenario.first_observation_tick + tp.L - 1) + 1
    if ticks < needed:
        raise ValueError(f"{ticks} ticks is too short; the metric warm-up needs at least {needed}")

    series = ConfigurationSeries(scenario.agents, scenario.dimension)
    env_obs, sys_obs = [], []
    for t in range(ticks):
        if t > 0:
            scenario.step()
        series.append_tick(scenario.configurations())
        if t >= scenario.first_observation_tick:
            env, system = scenario.observables()
            env_obs.append(env)
            sys_obs.append(system)
    log.info("simulated %s for %d ticks (seed %d)", config.scenario, ticks, config.seed)

    data = series.as_array()
    out: dict[str, MetricSeries] = {
        "coherence": coherence_series(data),
        "stability": stability_series(data, stab),
        "variability": variability_series(data, seed=config.seed),
    }
    bounds = scenario.bounds
    for j in range(scenario.dimension):
        g, a = usage_series(data, j, config.usage_L, bounds)
        out[f"global_usage_{j}"] = g
        out[f"average_usage_{j}"] = a

    eb, sb = scenario.environment_binning, scenario.system_binning
    if config.bin_count:
        # only continuous observables take the configurable bucket count
        if config.scenario == "flocking":
            eb = sb = dataclasses.replace(eb, bin_count=config.bin_count)
    start = scenario.first_observation_tick
    sys_c = complexity_signal(sys_obs, sb.bin_count, sb.value_range, start, source="system")
    env_c = complexity_signal(env_obs, eb.bin_count, eb.value_range, start, source="environment")
    out["transferability"] = transferability_series(sys_c, env_c, tp)

    result = RunResult(config, scenario, series, out, sys_c, env_c)
    if config.out is not None:
        result.write(config.out)
    return result


@dataclass
class PeakReport:
    metric: str
    peak_ticks: list[int]
    baseline_mean: float
    baseline_std: float
    multiplier: float
    windows: list[tuple[int, int]]
    verdicts: list[bool]

    @property
    def detected(self) -> int:
        return sum(self.verdicts)


def detect_peaks(
    series: MetricSeries,
    baseline: tuple[int, int],
    windows=(),
    multiplier: float = 3.0,
    direction: str = "up",
) -> PeakReport:
    """Flag ticks whose value leaves the baseline band.

    The band is ``mean + multiplier * std`` of the points with ticks in
    ``baseline`` (inclusive). ``direction`` is ``"up"`` (values above the
    band), ``"down"`` (below ``mean - multiplier * std``) or ``"both"``. A
    window counts as detected when a peak tick falls inside it.
    """
    ticks = np.asarray(series.ticks)
    values = np.asarray(series.values, dtype=float)
    mask = (ticks >= baseline[0]) & (ticks <= baseline[1])
    if not mask.any() or mask.all():
        raise ValueError("baseline must cover some but not all of the series")
    base = values[mask]
    mean = float(base.mean())
    std = float(base.std())
    margin = multiplier * std if std > 0 else 1e-9
    if direction == "up":
        hit = values > mean + margin
    elif direction == "down":
        hit = values < mean - margin
    elif direction == "both":
        hit = np.abs(values - mean) > margin
    else:
        raise ValueError(f"unknown direction {direction!r}")
    peaks = [int(t) for t in ticks[hit]]
    windows = [tuple(w) for w in windows]
    verdicts = [any(lo <= t <= hi for t in peaks) for lo, hi in windows]
    return PeakReport(series.name, peaks, mean, std, multiplier, windows, verdicts)


# metrics that fall, rather than rise, while the system is disturbed
PEAK_DIRECTION = {"coherence": "down"}


def disturbance_reports(result: RunResult, metrics=ADAPTATION_METRICS, multiplier: float = 3.0) -> dict[str, PeakReport]:
    """Peak reports for each metric against the scenario's scheduled disturbances."""
    scenario = result.scenario
    baseline = scenario.baseline()
    return {
        m: detect_peaks(
            result.metric(m),
            baseline,
            scenario.disturbances,
            multiplier=multiplier,
            direction=PEAK_DIRECTION.get(m, "up"),
        )
        for m in metrics
    }
