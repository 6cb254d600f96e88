import json

import pytest

from contraction_lab.cli import main
from contraction_lab.verify import run_verification
from contraction_lab.config import ExperimentConfig


def test_rates(tmp_path, capsys):
    assert main(["rates", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "rates.json").read_text())
    assert data["rate"]["binding"] == "weight"
    assert (tmp_path / "profile.csv").read_text().startswith("r,f,fprime,fsecond")
    assert "corollaries" in data


def test_simulate(tmp_path):
    assert main(["simulate", "--out", str(tmp_path), "--T", "0.1", "--seed", "4"]) == 0
    assert (tmp_path / "pair.csv").read_text().splitlines()[0] == "t,r,f_r,Q,rc"


def test_contract(tmp_path):
    assert main(["contract", "--out", str(tmp_path), "--T", "2", "--ensemble", "50"]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"experiment.json", "experiment_series.csv", "experiment_long.csv"} <= names


def test_sweep(tmp_path):
    assert main(["sweep-dim", "--out", str(tmp_path), "--T", "1", "--ensemble", "20", "--dims", "8,16"]) == 0
    data = json.loads((tmp_path / "experiment_sweep.json").read_text())
    assert data["dims"] == [8, 16] and data["theory_identical"]


def test_verify(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path), "--samples", "2000"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS profile" in out


def test_tps(tmp_path):
    assert main(["tps", "--out", str(tmp_path), "--samples", "2000", "--ensemble", "8", "--T", "0.5"]) == 0
    assert (tmp_path / "tps_paths.csv").read_text().splitlines()[0] == "path,s,x"


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[drift]\npreset = 'nonsense'\n")
    assert main(["rates", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["rates", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["contract", "--dt", "0.3"]) == 2


def test_failing_check_exit_code(tmp_path):
    # a 1-step horizon cannot resolve any decay inside the window
    cfg = tmp_path / "c.toml"
    cfg.write_text("[drift]\npreset = 'gaussian_bump'\n[coupling]\nT = 0.002\ndt = 0.001\nrecord_stride = 1\n"
                   "[experiment]\nn_pairs = 5\nwindow = [0.0, 1.0]\n")
    code = main(["contract", "--config", str(cfg), "--out", str(tmp_path)])
    data = json.loads((tmp_path / "experiment.json").read_text())
    assert code == (0 if data["passed"] else 1)


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])


def test_verification_report_structure():
    rep = run_verification(ExperimentConfig(), samples=1000)
    assert rep["passed"]
    assert {"assumption1", "profile", "reflection_isometry", "generator_mc"} <= set(rep["checks"])
