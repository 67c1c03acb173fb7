import csv
import json

import pytest

from ssiss.bounds import BoundReport
from ssiss.cli import main
from ssiss.experiments import (ExperimentConfig, ExperimentReport, emit_report,
                               parse_value, run_experiment)


def test_config_defaults_and_validation():
    cfg = ExperimentConfig("ssiss-run")
    assert cfg.beams["omega0"] == 0.5 and cfg.pulse["n"] == 16
    assert cfg.potential["x_L"] == 8.0 and cfg.params["momentum_tol"] == 0.01
    with pytest.raises(ValueError):
        ExperimentConfig("nope")
    with pytest.raises(ValueError):
        ExperimentConfig("ssiss-run", sweep=[["pulse.n", [float("inf")]]])
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": {}}, "ssiss-run")


def test_override_and_parse():
    cfg = ExperimentConfig("pulse-basic").with_override("pulse.delta_t", 0.1)
    assert cfg.pulse["delta_t"] == 0.1
    assert parse_value("[1, 2]") == [1, 2] and parse_value("abc") == "abc"
    with pytest.raises(ValueError):
        cfg.with_override("nothing.here", 1)


def test_config_file_roundtrip(tmp_path):
    cfg = ExperimentConfig("trotter-scaling", params={"taus": [0.02, 0.2]})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    back = ExperimentConfig.from_file(p)
    assert back.to_dict() == cfg.to_dict()


def _small_report():
    rep = ExperimentReport(config={"scenario": "demo"})
    rep.add_bound(BoundReport("a", "label", {"x": 1.0}, 2.0, 1.0))
    rep.check("ok", True)
    rep.timing["total_s"] = 0.1
    return rep


def test_report_json_roundtrip(tmp_path):
    rep = _small_report()
    (p,) = emit_report(rep, tmp_path, ["json"])
    back = ExperimentReport.from_dict(json.loads(p.read_text()))
    assert back.to_json() == rep.to_json()
    assert back.passed


def test_empty_sweep_single_row_csv(tmp_path):
    (p,) = emit_report(_small_report(), tmp_path, ["csv"])
    rows = list(csv.DictReader(p.open()))
    assert len(rows) == 1


def test_unknown_format_and_unwritable(tmp_path):
    with pytest.raises(ValueError):
        emit_report(_small_report(), tmp_path, ["pdf"])
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report(_small_report(), blocker / "sub", ["json"])


def test_imperfection_csv_schema(tmp_path):
    cfg = ExperimentConfig("imperfection-sweep",
                           params={"x_L_over_eps": [3, 4, 5, 6, 7, 8]})
    rep = run_experiment(cfg)
    paths = emit_report(rep, tmp_path, ["csv", "svg"])
    rows = list(csv.DictReader(paths[0].open()))
    assert len(rows) == 6
    assert list(rows[0]) == ["x_L", "y_M_min", "bound", "measured", "margin"]
    assert paths[1].read_text().lstrip().startswith("<?xml")


def test_determinism_and_verdicts():
    cfg = ExperimentConfig("selective-excite")
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.to_json(include_timing=False) == b.to_json(include_timing=False)
    assert any(bd.verdict for bd in a.bounds)


def test_sweep_expansion():
    cfg = ExperimentConfig("selective-excite", sweep=[["params.separation", [8.0, 10.0]]])
    rep = run_experiment(cfg)
    assert len(rep.rows) == 4
    assert any(k.endswith("params.separation=10.0") for k in rep.verdicts)


@pytest.mark.parametrize("scenario", ["trotter-scaling", "selective-excite"])
def test_every_scenario_emits_bounds(scenario):
    rep = run_experiment(ExperimentConfig(scenario))
    assert rep.bounds and all(b.verdict for b in rep.bounds if b.measured_error is not None)


def test_cli_exit_codes(tmp_path, capsys):
    code = main(["selective-excite", "--out", str(tmp_path), "--formats", "json,csv",
                 "--seed", "3"])
    assert code == 0
    assert (tmp_path / "selective-excite.json").exists()
    assert "PASS" in capsys.readouterr().out
    # an impossible threshold must fail the run
    code = main(["selective-excite", "--out", str(tmp_path),
                 "--set", "params.threshold=1.0"])
    assert code == 1
    assert main(["selective-excite", "--set", "nonsense"]) == 2


def test_cli_config_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"params": {"taus": [0.02, 0.04, 0.08]}}))
    assert main(["trotter-scaling", "--config", str(p), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "trotter-scaling.json").read_text())
    assert len(rep["rows"]) == 3
