import csv
import json
import re
from pathlib import Path

import numpy as np
import pytest
import yaml

from quadvs.harness import (
    SCENARIOS,
    ConfigError,
    compare_runs,
    config_from_dict,
    list_scenarios,
    load_config,
    run_scenario,
    scenario_config,
)
from quadvs.harness.cli import main
from quadvs.harness.config import SCHEMA_VERSION, config_to_dict
from quadvs.harness.metrics import COMPARE_COLUMNS, ScenarioMismatchError, convergence_time, settle_time
from quadvs.harness.runner import CSV_HEADERS, TIMING_COLUMN, _due

ROOT = Path(__file__).resolve().parents[1]


# ------------------------------------------------------------------ catalog and config


def test_catalog_is_exactly_the_six_scenarios():
    assert set(SCENARIOS) == {"line-0.3", "line-0.5", "ramp-0.015", "ramp-0.03", "s-curve", "static"}
    assert [sid for sid, _ in list_scenarios()] == list(SCENARIOS)
    sc = scenario_config("s-curve").target
    assert (sc.speed, sc.accel, sc.cap) == (0.1, 0.02, 0.1)
    assert scenario_config("ramp-0.015").target.accel == 0.015
    assert scenario_config("line-0.5").target.speed == 0.5


def test_unknown_scenario():
    with pytest.raises(KeyError):
        scenario_config("circle")


def test_config_round_trip():
    cfg = scenario_config("ramp-0.03", seed=7)
    assert config_from_dict(config_to_dict(cfg)) == cfg


@pytest.mark.parametrize(
    "doc, message",
    [
        ({"scenario": "x"}, "schema_version"),
        ({"schema_version": 99}, "schema_version"),
        ({"schema_version": 1, "colour": "red"}, "unknown"),
        ({"schema_version": 1, "target": {"speed": 0.3, "spin": 1}}, "unknown"),
        ({"schema_version": 1, "duration": "long"}, "duration"),
        ({"schema_version": 1, "observer_mode": "kalman"}, "observer_mode"),
        ({"schema_version": 1, "tier": "hybrid"}, "tier"),
        ({"schema_version": 1, "duration": -1.0}, "duration"),
        ({"schema_version": 1, "timing": {"control_rate": 50.0, "mpc_rate": 100.0}}, "rate"),
        ({"schema_version": 1, "target": []}, "mapping"),
    ],
)
def test_config_strictness(doc, message):
    with pytest.raises(ConfigError, match=message):
        config_from_dict(doc)


def test_committed_configs_load():
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        assert load_config(path).schema_version == SCHEMA_VERSION


def test_config_ints_accepted_for_floats(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("schema_version: 1\nduration: 3\ntarget: {speed: 1}\n")
    cfg = load_config(p)
    assert cfg.duration == 3.0 and isinstance(cfg.duration, float)
    assert cfg.target.speed == 1.0


# ------------------------------------------------------------------ scheduling and metrics


def test_integer_tick_scheduling():
    fired = [k for k in range(1000) if _due(k, 400.0, 1000)]
    assert len(fired) == 400
    gaps = set(np.diff(fired))
    assert gaps <= {2, 3}
    assert sum(_due(k, 100.0, 1000) for k in range(1000)) == 100


def test_convergence_time():
    t = np.arange(0, 10, 0.1)
    err = np.where(t < 3.0, 0.2, 0.01)
    assert convergence_time(t, err, 0.05, 2.0) == pytest.approx(3.0)
    err[50] = 0.1  # a spike at 5 s restarts the hold window
    assert convergence_time(t, err, 0.05, 2.0) == pytest.approx(5.1)
    assert convergence_time(t, np.full_like(t, 0.1), 0.05, 2.0) is None
    assert settle_time(t, err, 0.05) == pytest.approx(5.1)


# ------------------------------------------------------------------ runs


@pytest.fixture(scope="module")
def static_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("static")
    cfg = scenario_config("static", duration=4.0, output_dir=str(out))
    return run_scenario(cfg), out


def test_static_target_converges(static_run):
    res, _ = static_run
    assert res.metrics.status == "converged"
    assert res.exit_code == 0
    assert res.metrics.final_error < 0.01


def test_outputs_written(static_run):
    _, out = static_run
    for name in CSV_HEADERS:
        assert (out / f"{name}.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["metrics"]["status"] == "converged"
    assert summary["exit_code"] == 0
    assert summary["config"]["scenario"] == "static"


def test_csv_format(static_run):
    _, out = static_run
    raw = (out / "features.csv").read_bytes()
    assert raw.count(b"\r\n") == raw.count(b"\n")
    raw.decode("utf-8")
    with open(out / "features.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADERS["features"]
    assert all(len(r) == len(rows[0]) for r in rows)
    assert len(rows) - 1 == 4 * 400 + 1


def _dictionary_tables():
    text = (ROOT / "docs" / "data_dictionary.md").read_text(encoding="utf-8")
    tables = {}
    for name, body in re.findall(r"^## (\w+)\.csv.*?\n(.*?)(?=^## |\Z)", text, flags=re.S | re.M):
        tables[name] = [m for m in re.findall(r"^\| (\S+) \|", body, flags=re.M) if m not in ("column", "---|")]
    return tables


def test_headers_documented():
    tables = _dictionary_tables()
    for name, header in CSV_HEADERS.items():
        documented = tables[name]
        if name == "forces":
            assert documented == header + [TIMING_COLUMN]
        else:
            assert documented == header
    assert tables["comparison"] == list(COMPARE_COLUMNS)


def test_timing_column_opt_in(tmp_path):
    cfg = scenario_config("static", duration=0.05, tier="dynamic", log_timing=True, output_dir=str(tmp_path))
    run_scenario(cfg)
    with open(tmp_path / "forces.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][-1] == TIMING_COLUMN
    assert len(rows) > 1 and all(len(r) == len(rows[0]) for r in rows)


def test_byte_identical_reruns(tmp_path):
    outs = []
    for i in range(2):
        cfg = scenario_config("line-0.3", duration=1.0, seed=5, output_dir=str(tmp_path / f"r{i}"))
        cfg = cfg.replace(plant=cfg.plant.__class__(noise_px=1.0, sway_roll=0.02, sway_pitch=0.03))
        run_scenario(cfg)
        outs.append(tmp_path / f"r{i}")
    for name in CSV_HEADERS:
        assert (outs[0] / f"{name}.csv").read_bytes() == (outs[1] / f"{name}.csv").read_bytes()
    a = json.loads((outs[0] / "summary.json").read_text())
    b = json.loads((outs[1] / "summary.json").read_text())
    assert a["metrics"] == b["metrics"]


def test_seed_changes_noisy_run(tmp_path):
    texts = []
    for seed in (1, 2):
        cfg = scenario_config("static", duration=0.2, seed=seed, output_dir=str(tmp_path / str(seed)))
        cfg = cfg.replace(plant=cfg.plant.__class__(noise_px=1.0))
        run_scenario(cfg)
        texts.append((tmp_path / str(seed) / "features.csv").read_bytes())
    assert texts[0] != texts[1]


def test_wosto_loses_fast_target(tmp_path):
    cfg = scenario_config("line-0.5", observer_mode="wosto", output_dir=str(tmp_path))
    res = run_scenario(cfg)
    assert res.metrics.status == "tracking_lost"
    assert res.metrics.failure_time is not None and res.metrics.failure_time < cfg.duration
    assert res.metrics.steady_max_error is None
    assert res.exit_code == 3


# ------------------------------------------------------------------ compare


def _fake_metrics(scenario, mode, steady, rms=0.01, mx=0.1, status="converged"):
    return {"scenario": scenario, "observer_mode": mode, "status": status, "tracking_rms": rms,
            "tracking_max": mx, "steady_max_error": steady}


def test_compare_identical_runs_zero_difference():
    a = _fake_metrics("s-curve", "sto", 0.01)
    row = compare_runs(a, dict(a))
    assert row["rms_diff"] == 0 and row["max_diff"] == 0
    assert row["steady_ratio"] == 1.0


def test_compare_scenario_mismatch():
    with pytest.raises(ScenarioMismatchError):
        compare_runs(_fake_metrics("line-0.3", "sto", 0.01), _fake_metrics("line-0.5", "wosto", 0.01))


def test_compare_failed_run_counts_as_infinite():
    row = compare_runs(_fake_metrics("line-0.3", "sto", 0.002),
                       _fake_metrics("line-0.3", "wosto", None, status="tracking_lost"))
    assert row["steady_ratio"] == float("inf")
    assert row["converged_a"] and not row["converged_b"]
    assert set(row) == set(COMPARE_COLUMNS)


# ------------------------------------------------------------------ CLI


def test_cli_list(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for sid in SCENARIOS:
        assert sid in out


def test_cli_run_converged(tmp_path):
    assert main(["run", "--scenario", "static", "--duration", "3.5", "--output", str(tmp_path)]) == 0
    assert (tmp_path / "summary.json").exists()


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"schema_version": 1, "wheels": 4}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["run", "--scenario", "circle"]) == 2
    assert main(["run"]) == 2
    assert main(["run", "--scenario", "static", "--duration", "-1"]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_tracking_lost(tmp_path):
    code = main(["run", "--scenario", "line-0.5", "--observer-mode", "wosto", "--output", str(tmp_path)])
    assert code == 3


def test_cli_not_converged(tmp_path):
    assert main(["run", "--scenario", "line-0.3", "--duration", "1.0", "--output", str(tmp_path)]) == 4


def test_cli_numerical_fault(tmp_path, monkeypatch):
    from quadvs import sim

    def explode(self, *a, **k):
        raise sim.NumericalFault("non-finite plant state")

    monkeypatch.setattr(sim.Plant, "step_kinematic", explode)
    assert main(["run", "--scenario", "static", "--output", str(tmp_path)]) == 5
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["metrics"]["status"] == "numerical_fault"


def test_cli_seed_and_mode_overrides(tmp_path):
    assert main(["run", "--scenario", "static", "--duration", "0.1", "--seed", "9", "--observer-mode", "wosto",
                 "--output", str(tmp_path)]) == 4
    cfg = json.loads((tmp_path / "summary.json").read_text())["config"]
    assert cfg["seed"] == 9 and cfg["observer_mode"] == "wosto"


def test_cli_compare_report(tmp_path):
    code = main(["compare", "--scenario", "static", "--scenario", "line-0.3", "--duration", "1.0",
                 "--output", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "comparison.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(COMPARE_COLUMNS)
    assert [r[0] for r in rows[1:]] == ["static", "line-0.3"]
    for sid in ("static", "line-0.3"):
        for mode in ("sto", "wosto"):
            assert (tmp_path / sid / mode / "summary.json").exists()
