import csv
import json
import os

import pytest

from qhodecay import floquet
from qhodecay.cli import argv_from_params, main, sweep_pairs


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest(tmp_path, name):
    with open(tmp_path / f"{name}.manifest.json") as fh:
        return json.load(fh)


def test_matel_one_gaussian(tmp_path):
    assert run(tmp_path, "matel", "one", "--k", "2", "--mu", "0", "--m", "1", "--n", "1") == 0
    (row,) = read_csv(tmp_path / "matel_one.csv")
    assert float(row["abs_I"]) == pytest.approx(0.367879, abs=1e-6)
    man = manifest(tmp_path, "matel_one")
    for key in ("command", "params", "version", "started_at", "duration_s", "outputs"):
        assert key in man
    assert man["outputs"] == [str(tmp_path / "matel_one.csv")]


def test_dioph_check(tmp_path):
    assert run(tmp_path, "dioph", "check", "--nu", "1.0", "--gamma", "0.5", "--tau", "1", "--K", "100") == 0
    (row,) = read_csv(tmp_path / "dioph_check.csv")
    assert row["verdict"] == "true"


def test_simulate_eps0(tmp_path, config_dir):
    assert run(tmp_path, "simulate", "--config", os.path.join(config_dir, "eps0.toml")) == 0
    traj = read_csv(tmp_path / "simulate.trajectory.csv")
    for col in ("norm_0", "norm_1"):
        vals = [float(r[col]) for r in traj]
        assert max(vals) - min(vals) <= 1e-10 * vals[0]
    assert manifest(tmp_path, "simulate")["summary"]["config"]["sim"]["epsilon"] == 0.0


def test_hermite_eval_and_langer_audit(tmp_path):
    assert run(tmp_path, "hermite", "eval", "--n", "1,2", "--x", "0,1") == 0
    assert len(read_csv(tmp_path / "hermite_eval.csv")) == 4
    assert run(tmp_path, "langer", "audit", "--n-list", "100", "--grid", "10") == 0
    rows = read_csv(tmp_path / "langer_audit.csv")
    assert len(rows) == 20 and {r["n"] for r in rows} == {"100"}


def test_sweep_fit_report_chain(tmp_path, config_dir):
    assert run(tmp_path, "matel", "sweep", "--config", os.path.join(config_dir, "sweep.toml")) == 0
    sweep = tmp_path / "matel_sweep.csv"
    assert run(tmp_path, "matel", "decay-fit", "--input", str(sweep)) == 0
    (fit,) = read_csv(tmp_path / "matel_decay_fit.csv")
    assert float(fit["bound_slope"]) == pytest.approx(-1 / 6)
    assert run(tmp_path, "report", "--inputs", str(sweep)) == 0
    metrics = {r["metric"]: r["value"] for r in read_csv(tmp_path / "report.csv")}
    assert float(metrics["sup_ratio"]) == pytest.approx(max(float(r["ratio"]) for r in read_csv(sweep)))


def test_regions_vdc_melnikov_measure(tmp_path, config_dir):
    assert run(tmp_path, "regions", "audit", "--k", "1", "--mu", "0", "--m", "200", "--n", "205") == 0
    assert manifest(tmp_path, "regions_audit")["summary"]["additivity_error"] < 1e-10
    assert run(tmp_path, "vdc", "suite", "--seed", "3", "--count", "20") == 0
    assert all(r["holds"] == "true" for r in read_csv(tmp_path / "vdc_suite.csv"))
    assert run(tmp_path, "melnikov", "check", "--omega", "1,1", "--kappa", "0.001", "--K", "10") == 0
    (row,) = read_csv(tmp_path / "melnikov_check.csv")
    assert row["verdict"] == "false"
    assert run(tmp_path, "dioph", "measure", "--config", os.path.join(config_dir, "measure.toml")) == 0
    assert len(read_csv(tmp_path / "dioph_measure.csv")) == 3


@pytest.mark.parametrize("argv", [
    ["matel", "one", "--k", "2", "--bogus", "1"],
    ["nonsense"],
    ["matel", "one", "--k", "two", "--mu", "0", "--m", "1", "--n", "1"],
])
def test_usage_errors_exit_2(tmp_path, argv, capsys):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, *argv)
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["dioph", "check", "--nu", "1,1", "--gamma", "0.1", "--tau", "0.5"],
    ["matel", "one", "--k", "1", "--mu", "0.5", "--m", "1", "--n", "1"],
    ["matel", "one", "--k", "0", "--mu", "0", "--m", "1", "--n", "1"],
    ["simulate", "--config", "/nonexistent.toml"],
    ["melnikov", "check", "--omega", "1.5", "--kappa", "0.3"],
])
def test_validation_errors_exit_2(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_bad_toml_exit_2(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[sim\nepsilon = ")
    assert run(tmp_path, "simulate", "--config", str(p)) == 2


def test_numerical_failure_exit_3(tmp_path, config_dir, monkeypatch):
    monkeypatch.setattr(floquet, "NORM_DRIFT_LIMIT", -1.0)
    assert run(tmp_path, "simulate", "--config", os.path.join(config_dir, "eps0.toml")) == 3


@pytest.mark.parametrize("argv", [
    ["vdc", "suite", "--seed", "11", "--count", "15"],
    ["dioph", "measure", "--config", "CONFIG/measure.toml"],
    ["simulate", "--config", "CONFIG/eps0.toml"],
    ["matel", "one", "--k", "0.5", "--mu", "0.2", "--m", "30", "--n", "41"],
])
def test_deterministic_and_manifest_round_trip(tmp_path, config_dir, argv):
    argv = [a.replace("CONFIG", config_dir) for a in argv]
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run(a, *argv) == 0 and run(b, *argv) == 0
    names = [f for f in os.listdir(a) if f.endswith(".csv") or f.endswith(".txt")]
    for f in names:
        assert (a / f).read_bytes() == (b / f).read_bytes()
    (man_name,) = [f for f in os.listdir(a) if f.endswith(".manifest.json")]
    with open(a / man_name) as fh:
        params = json.load(fh)["params"]
    params["out"] = str(c)
    assert main(argv_from_params(params)) == 0
    for f in names:
        assert (a / f).read_bytes() == (c / f).read_bytes()


def test_sweep_pairs():
    pairs = sweep_pairs({"pairs": [[3, 4]], "diagonal": {"start": 10, "stop": 100, "count": 3}})
    assert pairs == [(3, 4), (10, 10), (32, 32), (100, 100)]
    with pytest.raises(ValueError):
        sweep_pairs({})
