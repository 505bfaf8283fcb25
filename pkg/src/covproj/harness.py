"""Monte Carlo SINR benchmark.

For every sample support ``K`` and trial ``i`` the harness draws ``K``
secondary vectors from a stream seeded by ``(seed, K, i)``, forms each
estimator's covariance, and evaluates ``|w^H s|^2 / (w^H M w)`` with
``w = M_hat^{-1} s`` on every grid point. Linear SINRs are averaged over
trials in trial-index order, then converted to dB, so results do not depend
on the worker count.
"""

import csv
import io
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

import covproj
from covproj import _constants as C
from covproj import kernels
from covproj.baselines import FPE_INIT, FPE_NORMALIZATION, FpeConfig, fpe, nscm, scm
from covproj.hermitian import eig_hermitian, solve_weight, solve_weight_eig
from covproj.projector import project_spectrum, resolve_gauge
from covproj.scenarios import GAMMA_PARAMETERIZATION, Sampler, db2lin, scenario_from_json, scenario_to_json, true_kappa

CSV_HEADER = [
    "experiment_id", "scenario_type", "estimator", "K", "mc", "sigma_a_db", "sigma2_db",
    "kappa", "grid_value", "sinr_av_db", "bound_db", "failed_trials",
]
BOUND_ROW = "bound"
OUT_OF_SCOPE = {"cml", "fml", "lre", "lre-6", "lre-7"}
REGISTRY = ("fne", "sne", "gauge:<name>", "scm", "nscm", "fpe", "clairvoyant")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class OutOfScopeEstimator(ConfigError):
    pass


# ---------------------------------------------------------------------------
# estimators

@dataclass(frozen=True)
class TrialContext:
    sigma2: float
    kappa: float
    m_true: np.ndarray


def _projection(norm):
    def est(x, ctx):
        s = scm(x) / ctx.sigma2
        return project_spectrum(eig_hermitian(s), ctx.sigma2, ctx.kappa, norm)[0]
    return est


def _fpe_estimator(x, ctx):
    return fpe(x, FpeConfig())


ESTIMATORS = {
    "fne": _projection("fro"),
    "sne": _projection("spectral"),
    "scm": lambda x, ctx: scm(x),
    "nscm": lambda x, ctx: nscm(x),
    "fpe": _fpe_estimator,
    "clairvoyant": lambda x, ctx: ctx.m_true,
}


def resolve_estimator(name):
    """Look up an estimator callable ``f(data, ctx) -> M_hat`` by registry name."""
    key = name.lower()
    if key in OUT_OF_SCOPE:
        raise OutOfScopeEstimator(
            f"estimator {name!r} is not implemented: its algorithm belongs to an external reference "
            f"(out of scope). Available: {', '.join(REGISTRY)}"
        )
    if key in ESTIMATORS:
        return ESTIMATORS[key]
    if key.startswith("gauge:"):
        try:
            gauge = resolve_gauge(key.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"{exc}; registry: {', '.join(REGISTRY)}") from None
        return _projection(gauge)
    raise ConfigError(f"unknown estimator {name!r}; registry: {', '.join(REGISTRY)}")


# ---------------------------------------------------------------------------
# SINR

def sinr_bound(m_true, s):
    """Clairvoyant SINR ``s^H M^{-1} s`` (vector input) or per column of ``s``."""
    s = np.asarray(s, dtype=np.complex128)
    try:
        np.linalg.cholesky(m_true)
    except np.linalg.LinAlgError:
        raise ValueError("sinr_bound: true covariance is not positive definite") from None
    y = np.linalg.solve(m_true, s)
    return np.real(np.sum(s.conj() * y, axis=0))


def sinr_trial(m_hat, m_true, s):
    """``|w^H s|^2 / (w^H M w)`` with ``w = solve_weight(m_hat, s)``.

    ``s`` may be one steering vector or an ``(n, G)`` matrix of them. A zero
    weight yields SINR 0.
    """
    s = np.asarray(s, dtype=np.complex128)
    single = s.ndim == 1
    s2 = s[:, None] if single else s
    w = solve_weight(m_hat, s2)
    out = kernels.sinr_batch(np.ascontiguousarray(w), np.ascontiguousarray(s2), np.ascontiguousarray(m_true))
    return float(out[0]) if single else out


def to_db(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    return np.maximum(out, C.SINR_DB_FLOOR)


# ---------------------------------------------------------------------------
# configuration

def _grid_from_json(obj):
    if isinstance(obj, list):
        grid = [float(v) for v in obj]
    elif isinstance(obj, dict) and {"start", "stop", "step"} <= set(obj):
        start, stop, step = float(obj["start"]), float(obj["stop"]), float(obj["step"])
        if step <= 0:
            raise ConfigError("grid.step must be > 0")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + i * step, 12) for i in range(count)]
    else:
        raise ConfigError("grid must be a list of values or {start, stop, step}")
    if not grid:
        raise ConfigError("grid must be non-empty")
    return grid


@dataclass
class ExperimentConfig:
    scenario: object
    k_values: List[int]
    grid: List[float]
    estimators: List[str]
    mc: int = 500
    seed: int = 0
    sigma2_db: float = 0.0
    kappa_mode: str = "true"
    kappa: Optional[float] = None
    experiment_id: str = "experiment"

    def __post_init__(self):
        if self.mc < 1:
            raise ConfigError("mc must be >= 1")
        if not self.grid:
            raise ConfigError("grid must be non-empty")
        if not self.estimators:
            raise ConfigError("estimators must be non-empty")
        if not self.k_values or any(int(k) < 1 for k in self.k_values):
            raise ConfigError("k_values must be a non-empty list of integers >= 1")
        if self.kappa_mode not in ("true", "explicit"):
            raise ConfigError("kappa_mode must be 'true' or 'explicit'")
        if self.kappa_mode == "explicit" and (self.kappa is None or not self.kappa >= 1):
            raise ConfigError("kappa_mode 'explicit' needs a 'kappa' value >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name in self.estimators:
            resolve_estimator(name)

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {"scenario", "k_values", "grid", "estimators", "mc", "seed", "sigma2_db",
                 "kappa_mode", "kappa", "experiment_id"}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config field(s): {sorted(extra)}")
        for key in ("scenario", "k_values", "grid", "estimators"):
            if key not in obj:
                raise ConfigError(f"config is missing field '{key}'")
        try:
            scenario = scenario_from_json(obj["scenario"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        try:
            return cls(
                scenario=scenario,
                k_values=[int(k) for k in obj["k_values"]],
                grid=_grid_from_json(obj["grid"]),
                estimators=[str(e) for e in obj["estimators"]],
                mc=int(obj.get("mc", 500)),
                seed=int(obj.get("seed", 0)),
                sigma2_db=float(obj.get("sigma2_db", 0.0)),
                kappa_mode=str(obj.get("kappa_mode", "true")),
                kappa=None if obj.get("kappa") is None else float(obj["kappa"]),
                experiment_id=str(obj.get("experiment_id", "experiment")),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from None

    def to_json(self):
        return {
            "experiment_id": self.experiment_id,
            "scenario": scenario_to_json(self.scenario),
            "k_values": list(self.k_values),
            "grid": list(self.grid),
            "estimators": list(self.estimators),
            "mc": self.mc,
            "seed": self.seed,
            "sigma2_db": self.sigma2_db,
            "kappa_mode": self.kappa_mode,
            "kappa": self.kappa,
        }


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return ExperimentConfig.from_json(obj)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolve_threads(threads=None):
    if threads is not None:
        if int(threads) < 1:
            raise ConfigError("--threads must be a positive integer")
        return int(threads)
    env = os.environ.get("COVPROJ_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"COVPROJ_THREADS must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ConfigError(f"COVPROJ_THREADS must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# results

@dataclass
class SinrCurve:
    """Average SINR of every estimator over the grid, for one sample support ``K``."""

    experiment_id: str
    scenario_type: str
    K: int
    mc: int
    sigma_a_db: float
    sigma2_db: float
    kappa: float
    grid: List[float]
    sinr_db: Dict[str, List[float]]
    bound_db: List[float]
    failed_trials: Dict[str, int] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def rows(self):
        for est in list(self.sinr_db) + [BOUND_ROW]:
            values = self.bound_db if est == BOUND_ROW else self.sinr_db[est]
            failed = 0 if est == BOUND_ROW else self.failed_trials.get(est, 0)
            for g, v, b in zip(self.grid, values, self.bound_db):
                yield [self.experiment_id, self.scenario_type, est, self.K, self.mc, self.sigma_a_db,
                       self.sigma2_db, self.kappa, g, v, b, failed]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(curves):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for curve in curves:
        for row in curve.rows():
            writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_results(curves, out_dir, run_meta=None):
    """Write ``results.csv``, ``results.json`` and ``run_meta.json`` into ``out_dir``."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = {name: os.path.join(out_dir, name) for name in ("results.csv", "results.json", "run_meta.json")}
        with open(paths["results.csv"], "w", newline="") as fh:
            fh.write(results_csv(curves))
        with open(paths["results.json"], "w") as fh:
            json.dump({"curves": [asdict(c) for c in curves], "metadata": _decision_flags()}, fh, indent=1)
            fh.write("\n")
        with open(paths["run_meta.json"], "w") as fh:
            meta = {key: v for key, v in (run_meta or {}).items() if key not in ("trials", "bound_linear")}
            json.dump(meta, fh, indent=1, default=str)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir!r}: {exc}") from exc
    return paths


def load_results(path):
    with open(path) as fh:
        obj = json.load(fh)
    return [SinrCurve(**c) for c in obj["curves"]]


def _decision_flags():
    return {
        "library_version": covproj.__version__,
        "kernel_backend": kernels.BACKEND,
        "sinc": "see scenario.sinc",
        "texture_gamma": GAMMA_PARAMETERIZATION,
        "fpe_init": FPE_INIT,
        "fpe_normalization": FPE_NORMALIZATION,
        "averaging": "linear SINR averaged over successful trials, then converted to dB",
        "sinr_db_floor": C.SINR_DB_FLOOR,
        "scm_singular_weight": "pseudo-inverse",
    }


# ---------------------------------------------------------------------------
# Monte Carlo engine

def trial_rng(seed, k, trial):
    """Independent stream for trial ``trial`` at sample support ``k``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(k), int(trial)]))


def _run_trial(sampler, estimators, ctx, steering, bound, seed, k, trial):
    x = sampler(k, trial_rng(seed, k, trial))
    out = np.zeros((len(estimators), steering.shape[1]))
    failed = np.zeros(len(estimators), dtype=bool)
    errors = []
    for e, (name, est) in enumerate(estimators):
        try:
            m_hat = est(x, ctx)
            w = solve_weight_eig(eig_hermitian(m_hat), steering)
            out[e] = kernels.sinr_batch(np.ascontiguousarray(w), steering, ctx.m_true)
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            failed[e] = True
            errors.append(f"{name}: {exc}")
    violations = int(np.count_nonzero(out > bound[None, :] * (1.0 + 1e-9)))
    return out, failed, violations, errors


def run_experiment(config, threads=None, keep_trials=False):
    """Run the sweep. Returns ``(curves, run_meta)``.

    ``run_meta`` echoes the config and records warnings, zero-SINR counts and
    per-trial bound violations. With ``keep_trials`` it also holds the
    per-trial linear SINR arrays under ``"trials"`` (keyed by K, then
    estimator) and the linear bound; those keys are not written to disk.
    """
    t0 = time.perf_counter()
    workers = resolve_threads(threads)
    sc = config.scenario
    sampler = Sampler(sc)
    m_true = sampler.m_true
    kappa = true_kappa(m_true) if config.kappa_mode == "true" else float(config.kappa)
    sigma2 = float(db2lin(config.sigma2_db))
    ctx = TrialContext(sigma2, kappa, m_true)
    steering = np.ascontiguousarray(sc.steering(np.asarray(config.grid, dtype=float)))
    bound = sinr_bound(m_true, steering)
    bound_db = [float(v) for v in to_db(bound)]
    all_estimators = [(name, resolve_estimator(name)) for name in config.estimators]

    curves = []
    trials = {}
    warn_log = []
    total_violations = 0
    zero_counts = {}
    for k in config.k_values:
        estimators = []
        for name, est in all_estimators:
            if name.lower() == "fpe" and k < sc.n:
                msg = f"K={k}: estimator 'fpe' skipped (needs K >= n = {sc.n})"
                warn_log.append(msg)
                warnings.warn(msg)
                continue
            estimators.append((name, est))

        def job(trial, estimators=estimators, k=k):
            return _run_trial(sampler, estimators, ctx, steering, bound, config.seed, k, trial)

        if workers == 1:
            results = [job(i) for i in range(config.mc)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(job, range(config.mc)))

        sums = np.zeros((len(estimators), steering.shape[1]))
        ok_counts = np.zeros(len(estimators), dtype=int)
        zeros = np.zeros(len(estimators), dtype=int)
        for out, failed, violations, errors in results:  # trial-index order
            total_violations += violations
            for e in range(len(estimators)):
                if failed[e]:
                    continue
                sums[e] += out[e]
                ok_counts[e] += 1
                zeros[e] += int(np.count_nonzero(out[e] == 0.0))
            warn_log.extend(f"K={k}: {msg}" for msg in errors)

        sinr_db, failed_trials = {}, {}
        for e, (name, _) in enumerate(estimators):
            failed_trials[name] = int(config.mc - ok_counts[e])
            if ok_counts[e] == 0:
                msg = f"K={k}: estimator {name!r} failed in every trial; skipped"
                warn_log.append(msg)
                warnings.warn(msg)
                continue
            sinr_db[name] = [float(v) for v in to_db(sums[e] / ok_counts[e])]
            zero_counts[f"{name}@K={k}"] = int(zeros[e])
        failed_trials = {name: n for name, n in failed_trials.items() if name in sinr_db}
        if keep_trials:
            trials[k] = {name: np.array([r[0][e] for r in results if not r[1][e]])
                         for e, (name, _) in enumerate(estimators)}
        curves.append(SinrCurve(
            experiment_id=config.experiment_id, scenario_type=sc.type, K=int(k), mc=config.mc,
            sigma_a_db=float(sc.noise_power_db), sigma2_db=float(config.sigma2_db), kappa=float(kappa),
            grid=[float(g) for g in config.grid], sinr_db=sinr_db, bound_db=list(bound_db),
            failed_trials=failed_trials,
        ))

    run_meta = {
        "config": config.to_json(),
        "seed": config.seed,
        "threads": workers,
        "kappa": kappa,
        "decisions": _decision_flags(),
        "warnings": warn_log,
        "zero_sinr_trials": zero_counts,
        "bound_violations": total_violations,
        "wall_time_s": time.perf_counter() - t0,
    }
    if keep_trials:
        run_meta["trials"] = trials
        run_meta["bound_linear"] = bound
    return curves, run_meta


def estimation_errors(scenario, estimator, k, mc, seed=0, sigma2_db=0.0, kappa=None):
    """Per-trial ``||M - M_hat||_F`` for one estimator (consistency studies)."""
    sampler = Sampler(scenario)
    m_true = sampler.m_true
    ctx = TrialContext(float(db2lin(sigma2_db)), true_kappa(m_true) if kappa is None else float(kappa), m_true)
    est = resolve_estimator(estimator)
    errs = np.empty(mc)
    for i in range(mc):
        errs[i] = np.linalg.norm(m_true - est(sampler(k, trial_rng(seed, k, i)), ctx))
    return errs
