import json
import subprocess
import sys

import pytest

from dumbbell_spectra.cli import main

CONFIG = {"geometry": {"epsilon": 0.05}, "mesh": {"h_bulk": 0.1},
          "target": {"mode": [2, 0]}, "sweep": {"epsilons": [0.08, 0.04, 0.02]},
          "solver": {"k_eigs": 8}}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(CONFIG))
    return p


def _run(*args):
    return main([str(a) for a in args])


def test_predict_mu1(cfg_path, tmp_path):
    assert _run("predict", "--config", cfg_path, "--out", tmp_path / "o") == 0
    d = json.loads((tmp_path / "o" / "predict.json").read_text())
    assert d["schema"] == 1
    assert d["k"] == 1 and d["order"] == "OddBelowEven"
    assert d["indices"] == {"even": 7, "odd": 6}


def test_sl_taus(cfg_path, tmp_path):
    assert _run("sl", "--config", cfg_path, "--out", tmp_path) == 0
    d = json.loads((tmp_path / "sl.json").read_text())
    for n, t in enumerate(d["taus"], start=1):
        assert t == pytest.approx((n * 3.141592653589793 / 2) ** 2, rel=1e-5)


def test_verify_exit_zero_and_cache_identity(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("DBSPEC_CACHE_DIR", str(tmp_path / "cache"))
    out = tmp_path / "o"
    assert _run("verify", "--config", cfg_path, "--out", out) == 0
    cold = (out / "verify.json").read_bytes()
    d = json.loads(cold)
    assert d["courant_sharp"]["even"] and d["courant_sharp"]["odd"]
    assert d["courant_sharp_verdict"] == "Courant sharp pair"
    (out / "verify.json").unlink()
    assert _run("verify", "--config", cfg_path, "--out", out) == 0
    assert (out / "verify.json").read_bytes() == cold
    assert (out / "trace.csv").read_text().startswith("epsilon,lambda_even")


def test_nodal_and_mesh(cfg_path, tmp_path):
    assert _run("mesh", "--config", cfg_path, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "mesh.json").read_text())["problems"] == []
    assert _run("nodal", "--config", cfg_path, "--out", tmp_path, "--seed", 3) == 0
    d = json.loads((tmp_path / "nodal.json").read_text())
    assert d["courant_bound_holds"]


def test_config_error_exit(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"mesh": {"h_bulk": -1}}))
    assert _run("solve", "--config", p) == 2


def test_numeric_failure_exit(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"target": {"mode": [0, 1]}}))  # zero at the attachment point
    assert _run("predict", "--config", p, "--out", tmp_path) == 3


@pytest.mark.parametrize("args,code", [(["--help"], 0), (["--version"], 0),
                                       (["solve", "--help"], 0), (["sweep", "--version"], 0),
                                       (["solve", "--config", "x", "--bogus"], 2), (["nope"], 2)])
def test_help_version_and_unknown(args, code):
    res = subprocess.run([sys.executable, "-m", "dumbbell_spectra.cli", *args],
                         capture_output=True, text=True)
    assert res.returncode == code
    if "--version" in args:
        assert "0.1.0" in res.stdout
