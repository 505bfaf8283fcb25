import json
import subprocess
import sys

import numpy as np
import pytest

from covproj.cli import main
from covproj.hermitian import load_matrix, save_matrix


@pytest.fixture
def small_config(tmp_path):
    obj = {
        "experiment_id": "cli",
        "scenario": {"type": "spatial", "n": 8,
                     "jammers": [{"power_db": 30.0, "angle_deg": 20.0, "fractional_bandwidth": 0.3}],
                     "noise_power_db": 0.0},
        "k_values": [8], "grid": [-10.0, 0.0, 10.0], "estimators": ["fne", "scm"], "mc": 3, "seed": 1,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    return path, obj


def test_project_identity(tmp_path, capsys):
    src, out = tmp_path / "i.json", tmp_path / "o.json"
    save_matrix(src, np.eye(3))
    assert main(["project", "--input", str(src), "--sigma2-db", "0", "--kappa", "7",
                 "--norm", "fne", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "branch = fro:d1<=kappa" in text
    assert f"u* = {1 / 7!r}" in text
    np.testing.assert_allclose(load_matrix(out), np.eye(3), atol=1e-14)


def test_project_sigma2_scaling(tmp_path, capsys):
    src, out = tmp_path / "i.json", tmp_path / "o.json"
    save_matrix(src, np.eye(2))
    assert main(["project", "--input", str(src), "--sigma2-db", "10", "--kappa", "3",
                 "--norm", "sne", "--out", str(out)]) == 0
    np.testing.assert_allclose(load_matrix(out), 10 * np.eye(2), rtol=1e-12)
    assert "spec:case-1" in capsys.readouterr().out


def test_oracle_agreement(tmp_path, capsys):
    src = tmp_path / "d.json"
    save_matrix(src, np.diag([10.0, 0.5]))
    assert main(["oracle", "--input", str(src), "--sigma2-db", "0", "--kappa", "2",
                 "--norm", "fne", "--grid-points", "100000"]) == 0
    text = capsys.readouterr().out
    assert "u* = 4.1" in text and "yes" in text


def test_oracle_kyfan(tmp_path, capsys):
    src = tmp_path / "d.json"
    save_matrix(src, np.diag([10.0, 3.0, 0.5]))
    assert main(["oracle", "--input", str(src), "--sigma2-db", "0", "--kappa", "4",
                 "--norm", "kyfan:2", "--grid-points", "20000"]) == 0
    assert "generic" in capsys.readouterr().out


def test_run(tmp_path, small_config, capsys):
    path, _ = small_config
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out), "--threads", "2"]) == 0
    for name in ("results.csv", "results.json", "run_meta.json"):
        assert (out / name).exists()
    assert len((out / "results.csv").read_text().splitlines()) == 1 + 3 * 3


def test_missing_config(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_malformed_config(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n "mc": }')
    assert main(["run", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_unknown_estimator_lists_registry(tmp_path, small_config, capsys):
    path, obj = small_config
    obj["estimators"] = ["fne", "ridge"]
    path.write_text(json.dumps(obj))
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "ridge" in err and "nscm" in err and "clairvoyant" in err


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    src = tmp_path / "i.json"
    save_matrix(src, np.eye(2))
    assert main(["project", "--input", str(src), "--sigma2-db", "0", "--kappa", "2", "--norm", "bogus"]) == 1
    assert main(["project", "--input", str(src), "--sigma2-db", "0", "--kappa", "0.5"]) == 1
    assert main(["project", "--input", str(tmp_path / "none.json"), "--sigma2-db", "0", "--kappa", "2"]) == 1


def test_numerical_failure_exit_2(tmp_path, capsys):
    src = tmp_path / "ind.json"
    save_matrix(src, np.diag([1.0, -1.0]))
    assert main(["project", "--input", str(src), "--sigma2-db", "0", "--kappa", "2"]) == 2
    assert "numerical" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    src = tmp_path / "i.json"
    save_matrix(src, np.eye(2))
    r = subprocess.run([sys.executable, "-m", "covproj", "project", "--input", str(src),
                        "--sigma2-db", "0", "--kappa", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and "branch" in r.stdout
    r = subprocess.run([sys.executable, "-m", "covproj", "run", "--config", "missing.json", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 1
