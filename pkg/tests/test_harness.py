import dataclasses
import json
import os

import numpy as np
import pytest

from covproj.harness import (
    CSV_HEADER, ConfigError, ExperimentConfig, OutOfScopeEstimator, emit_results, load_config,
    load_results, resolve_estimator, resolve_threads, results_csv, run_experiment, sinr_bound,
    sinr_trial, to_db,
)
from covproj.scenarios import Jammer, SpatialScenario, steering_spatial, total_covariance

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
SPATIAL = SpatialScenario(8, [Jammer(30.0, 20.0, 0.3)], 0.0)


def small_config(**kw):
    base = dict(scenario=SPATIAL, k_values=[4, 16], grid=[-30.0, 0.0, 20.0, 45.0],
                estimators=["fne", "sne", "scm", "nscm", "fpe"], mc=6, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


# SINR

def test_sinr_bound_examples():
    s = steering_spatial(0.0, 8)
    assert sinr_bound(np.eye(8), s) == pytest.approx(8.0)
    assert to_db(8.0) == pytest.approx(9.0309, abs=1e-4)
    assert sinr_bound(np.diag([2.0, 2.0]), np.array([1, 1])) == pytest.approx(1.0)
    # frozen from a direct solve on the constructed matrix
    m = total_covariance(SPATIAL.colored(), 0.0)
    assert sinr_bound(m, s) == pytest.approx(5.523972761943764, rel=1e-9)
    with pytest.raises(ValueError):
        sinr_bound(np.diag([1.0, 0.0]), np.array([1, 1]))


def test_sinr_trial_examples():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    m = a @ a.conj().T + np.eye(6)
    s = steering_spatial(12.0, 6)
    assert sinr_trial(m, m, s) == pytest.approx(sinr_bound(m, s), rel=1e-12)
    assert sinr_trial(np.eye(4), np.eye(4), np.ones(4)) == pytest.approx(4.0)
    s = np.array([1, 2j, -1])
    assert sinr_trial(3.5 * np.eye(3), np.eye(3), s) == pytest.approx(np.vdot(s, s).real)


def test_sinr_trial_zero_weight():
    assert sinr_trial(np.zeros((2, 2)), np.eye(2), np.array([1, 1])) == 0.0
    assert to_db(0.0) == -300.0


def test_sinr_scale_invariance():
    rng = np.random.default_rng(1)
    m = total_covariance(SPATIAL.colored(), 0.0)
    s = steering_spatial(np.arange(-60, 61, 5.0), 8)
    x = rng.standard_normal((12, 8)) + 1j * rng.standard_normal((12, 8))
    m_hat = x.T @ x.conj() / 12
    base = to_db(sinr_trial(m_hat, m, s))
    for c in (1e-3, 0.5, 7.0, 1e4):
        assert np.max(np.abs(to_db(sinr_trial(c * m_hat, m, s)) - base)) <= 1e-10


def test_sinr_bound_dominance_random():
    rng = np.random.default_rng(2)
    m = total_covariance(SPATIAL.colored(), 0.0)
    s = steering_spatial(np.arange(-60, 61, 1.0), 8)
    bound = sinr_bound(m, s)
    for _ in range(200):
        k = int(rng.integers(1, 20))
        x = rng.standard_normal((k, 8)) + 1j * rng.standard_normal((k, 8))
        assert np.all(sinr_trial(x.T @ x.conj() / k, m, s) <= bound * (1 + 1e-9))


# registry

def test_registry():
    for name in ("fne", "sne", "scm", "nscm", "fpe", "clairvoyant", "gauge:kyfan", "gauge:kyfan:2", "FNE"):
        assert callable(resolve_estimator(name))
    with pytest.raises(OutOfScopeEstimator, match="out of scope"):
        resolve_estimator("cml")
    with pytest.raises(ConfigError, match="registry"):
        resolve_estimator("ridge")
    with pytest.raises(ConfigError, match="registry"):
        resolve_estimator("gauge:bogus")


# config

def test_config_validation():
    for bad in (dict(mc=0), dict(grid=[]), dict(estimators=[]), dict(k_values=[0]),
                dict(kappa_mode="explicit"), dict(kappa_mode="weird"), dict(estimators=["lre"])):
        with pytest.raises(ConfigError):
            small_config(**bad)


def test_config_json(tmp_path):
    cfg = small_config(grid=[-1.0, 0.0, 1.0])
    again = ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg
    obj = cfg.to_json()
    obj["grid"] = {"start": -0.5, "stop": 0.5, "step": 0.25}
    assert ExperimentConfig.from_json(obj).grid == [-0.5, -0.25, 0.0, 0.25, 0.5]
    obj["extra"] = 1
    with pytest.raises(ConfigError, match="extra"):
        ExperimentConfig.from_json(obj)
    del obj["extra"], obj["scenario"]
    with pytest.raises(ConfigError, match="scenario"):
        ExperimentConfig.from_json(obj)
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.json"))
    p = tmp_path / "bad.json"
    p.write_text('{\n  "mc": 5,\n  oops\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(str(p))


@pytest.mark.parametrize("name", sorted(os.listdir(CONFIG_DIR)))
def test_shipped_configs_load(name):
    cfg = load_config(os.path.join(CONFIG_DIR, name))
    assert cfg.mc == 500 and cfg.sigma2_db == 0.0 and cfg.kappa_mode == "true"


def test_resolve_threads(monkeypatch):
    assert resolve_threads(3) == 3
    monkeypatch.setenv("COVPROJ_THREADS", "5")
    assert resolve_threads() == 5
    assert resolve_threads(2) == 2
    monkeypatch.setenv("COVPROJ_THREADS", "zero")
    with pytest.raises(ConfigError):
        resolve_threads()
    monkeypatch.delenv("COVPROJ_THREADS")
    assert resolve_threads() >= 1
    with pytest.raises(ConfigError):
        resolve_threads(0)


# runs

def test_clairvoyant_equals_bound():
    curves, meta = run_experiment(small_config(estimators=["clairvoyant"]), threads=1)
    for c in curves:
        np.testing.assert_allclose(c.sinr_db["clairvoyant"], c.bound_db, rtol=0, atol=1e-9)
    assert meta["bound_violations"] == 0


def test_fpe_skipped_below_n():
    with pytest.warns(UserWarning, match="fpe"):
        curves, meta = run_experiment(small_config(), threads=1)
    assert "fpe" not in curves[0].sinr_db and "fpe" in curves[1].sinr_db
    assert any("fpe" in w for w in meta["warnings"])


def test_bound_dominance_in_run():
    cfg = small_config(grid=list(np.arange(-60.0, 61.0, 3.0)), estimators=["fne", "sne", "scm", "nscm"], mc=40)
    curves, meta = run_experiment(cfg, threads=1, keep_trials=True)
    assert meta["bound_violations"] == 0
    bound = meta["bound_linear"]
    for per_k in meta["trials"].values():
        for arr in per_k.values():
            assert np.all(arr <= bound[None, :] * (1 + 1e-9))


def test_explicit_kappa():
    cfg = small_config(kappa_mode="explicit", kappa=50.0, estimators=["fne"])
    curves, meta = run_experiment(cfg, threads=1)
    assert curves[0].kappa == 50.0 and meta["kappa"] == 50.0


def test_determinism_across_threads(tmp_path):
    cfg = small_config(estimators=["fne", "sne", "scm", "nscm"], mc=12)
    outs = []
    for threads in (1, 4, 8):
        curves, meta = run_experiment(cfg, threads=threads)
        outs.append(results_csv(curves))
    assert outs[0] == outs[1] == outs[2]


def test_mc1_repeat_byte_identical(tmp_path):
    cfg = small_config(mc=1, estimators=["fne", "scm"])
    texts = []
    for i in range(2):
        curves, meta = run_experiment(cfg, threads=1)
        paths = emit_results(curves, str(tmp_path / f"r{i}"), meta)
        texts.append((open(paths["results.csv"], "rb").read(), open(paths["results.json"], "rb").read()))
    assert texts[0] == texts[1]


def test_emit_results(tmp_path):
    paths = emit_results([], str(tmp_path / "empty"))
    assert open(paths["results.csv"]).read() == ",".join(CSV_HEADER) + "\n"
    cfg = small_config(k_values=[16], estimators=["fne", "scm"], mc=3)
    curves, meta = run_experiment(cfg, threads=1)
    paths = emit_results(curves, str(tmp_path / "one"), meta)
    lines = open(paths["results.csv"]).read().splitlines()
    assert lines[0].split(",") == CSV_HEADER
    assert len(lines) - 1 == len(cfg.grid) * (len(cfg.estimators) + 1)
    assert load_results(paths["results.json"]) == curves
    meta_obj = json.load(open(paths["run_meta.json"]))
    for key in ("config", "seed", "decisions", "wall_time_s"):
        assert key in meta_obj
    assert meta_obj["decisions"]["fpe_init"] == "nscm"


def test_emit_results_unwritable(tmp_path):
    target = tmp_path / "file"
    target.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_results([], str(target))


def test_failed_estimator_is_skipped(monkeypatch):
    from covproj import harness

    def broken(x, ctx):
        raise ValueError("boom")

    monkeypatch.setitem(harness.ESTIMATORS, "nscm", broken)
    with pytest.warns(UserWarning, match="failed in every trial"):
        curves, meta = run_experiment(small_config(estimators=["fne", "nscm"], k_values=[8]), threads=2)
    assert "nscm" not in curves[0].sinr_db and "fne" in curves[0].sinr_db
    assert any("boom" in w for w in meta["warnings"])


def test_grid_dataclass_replace_keeps_validation():
    with pytest.raises(ConfigError):
        dataclasses.replace(small_config(), mc=0)
