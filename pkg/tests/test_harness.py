import json

import numpy as np
import pytest

from sasometrics.cli import main
from sasometrics.core import MetricSeries
from sasometrics.harness import RunConfig, detect_peaks, disturbance_reports, run


def test_constant_series_has_no_peaks():
    s = MetricSeries.from_arrays("m", range(500), np.full(500, 3.0))
    report = detect_peaks(s, (0, 99), [(200, 250)])
    assert report.peak_ticks == [] and report.verdicts == [False]


def test_single_spike():
    v = np.full(500, 3.0)
    v[321] = 13.0
    report = detect_peaks(MetricSeries.from_arrays("m", range(500), v), (0, 99))
    assert report.peak_ticks == [321]
    assert report.baseline_std == 0.0


def test_two_spikes_detected_in_their_windows():
    rng = np.random.default_rng(0)
    v = rng.normal(size=1000)
    v[[250, 750]] = 30.0
    report = detect_peaks(MetricSeries.from_arrays("m", range(1000), v), (0, 240), [(250, 320), (750, 820)])
    assert report.verdicts == [True, True]
    assert report.detected == 2


def test_peak_direction():
    v = np.zeros(100)
    v[60] = -5
    v[70] = 5
    s = MetricSeries.from_arrays("m", range(100), v)
    assert detect_peaks(s, (0, 49), direction="down").peak_ticks == [60]
    assert detect_peaks(s, (0, 49), direction="both").peak_ticks == [60, 70]
    with pytest.raises(ValueError):
        detect_peaks(s, (0, 49), direction="sideways")
    with pytest.raises(ValueError):
        detect_peaks(s, (0, 99))


def test_config_parsing():
    cfg = RunConfig.from_params("traffic", ["stability_M=10", "epsilon=1.5", "travel_time=4", "environment=lane"])
    assert (cfg.stability_M, cfg.epsilon) == (10, 1.5)
    assert cfg.scenario_overrides == {"travel_time": 4, "environment": "lane"}
    with pytest.raises(ValueError):
        RunConfig.from_params("traffic", ["bogus=1"])
    with pytest.raises(ValueError):
        RunConfig.from_params("traffic", ["novalue"])
    with pytest.raises(ValueError):
        RunConfig("chess")


def test_too_short_run_rejected():
    with pytest.raises(ValueError):
        run(RunConfig("life", ticks=20))


def test_life_run_outputs(tmp_path):
    result = run(RunConfig("life", seed=2, ticks=120, out=tmp_path))
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == sorted(
        [f"life_{m}.csv" for m in ("average_usage_0", "coherence", "global_usage_0", "stability",
                                    "transferability", "variability")] + ["life_summary.txt"]
    )
    stab = (tmp_path / "life_stability.csv").read_text().splitlines()
    assert stab[0] == "tick,value"
    assert int(stab[1].split(",")[0]) == result.series["stability"].ticks[0] == 2 * 15 - 1 + 2 * 14
    first_t = result.series["transferability"].ticks[0]
    assert first_t == 1 + 40 - 1
    summary = (tmp_path / "life_summary.txt").read_text().splitlines()
    assert summary[0].startswith("metric=average_usage_0, mean=")


def test_flocking_reports_use_scenario_windows():
    result = run(RunConfig("flocking", seed=0, ticks=600))
    reports = disturbance_reports(result, ("stability", "average_usage"))
    for r in reports.values():
        assert r.windows == [(500, 540)]
    assert reports["stability"].verdicts == [True]


def test_flocking_bin_count_override():
    result = run(RunConfig.from_params("flocking", ["bin_count=20"], ticks=80))
    assert result.system_complexity.bin_count == 20
    assert result.series["transferability"].params["bin_count"] == 20


def test_cli_run(tmp_path, capsys):
    code = main(["run", "--scenario", "life", "--seed", "1", "--ticks", "100", "--out", str(tmp_path),
                 "--param", "density=0.3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "metric=coherence" in out
    assert (tmp_path / "life_coherence.csv").exists()


def test_cli_bad_parameter(capsys):
    assert main(["run", "--scenario", "life", "--param", "nope=1"]) == 2
    assert "unknown parameter" in capsys.readouterr().err


def test_cli_check_subset(capsys):
    assert main(["check", "--only", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("[PASS] 1.")
    assert json.loads(lines[-1]) == {"failures": []}
