"""Covariance projection and Monte Carlo SINR benchmarks from the command line.

Subcommands: ``run``, ``project`` and ``oracle``. Exit codes: 0 success, 1 configuration/input error, 2 numerical failure.
"""

import argparse
import json
import sys

import numpy as np

from covproj import kernels
from covproj.baselines import FpeConvergenceError
from covproj.harness import ConfigError, emit_results, load_config, resolve_threads, run_experiment
from covproj.hermitian import IndefiniteMatrixError, clamp_eigenvalues, eig_hermitian, load_matrix, save_matrix
from covproj.projector import ProjectionConfig, normalize, oracle_scan, project, solver_for
from covproj.scenarios import db2lin

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

NORM_CHOICES = {"fne": "fro", "sne": "spectral", "kyfan": "kyfan"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _norm(name):
    if name in NORM_CHOICES:
        return NORM_CHOICES[name]
    if name.startswith("kyfan:") or name.startswith("gauge:"):
        return name.split(":", 1)[1] if name.startswith("gauge:") else name
    raise _UsageError(f"unknown norm {name!r}; choose fne, sne, kyfan or kyfan:<k>")


def build_parser():
    p = _Parser(prog="covproj", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a Monte Carlo SINR experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--threads", type=int, default=None)

    for name, helptext in (("project", "project one sample covariance matrix"),
                           ("oracle", "compare the solver with a brute-force grid")):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("--input", required=True, help="matrix JSON {n, re, im}")
        q.add_argument("--sigma2-db", type=float, required=True)
        q.add_argument("--kappa", type=float, required=True)
        q.add_argument("--norm", default="fne", help="fne | sne | kyfan | kyfan:<k>")
        if name == "project":
            q.add_argument("--out", default=None, help="write the projected matrix JSON here")
        else:
            q.add_argument("--grid-points", type=int, default=10**6)
    return p


def _cmd_run(args):
    config = load_config(args.config)
    threads = resolve_threads(args.threads)
    curves, meta = run_experiment(config, threads=threads)
    paths = emit_results(curves, args.out, meta)
    for w in meta["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {paths['results.csv']} ({len(curves)} curve(s), backend={kernels.BACKEND}, threads={threads})")
    return EXIT_OK


def _load_inputs(args):
    try:
        s_hat = load_matrix(args.input)
    except FileNotFoundError:
        raise ConfigError(f"input matrix not found: {args.input}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        config = ProjectionConfig(float(db2lin(args.sigma2_db)), args.kappa, _norm(args.norm))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return s_hat, config


def _cmd_project(args):
    s_hat, config = _load_inputs(args)
    m_hat, sol = project(s_hat, config)
    print(f"u* = {sol.u_star!r}")
    print(f"branch = {sol.branch.value}")
    print(f"objective = {sol.objective!r}")
    print("lambda* = " + json.dumps([float(x) for x in sol.lambda_star]))
    if args.out:
        save_matrix(args.out, m_hat)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_oracle(args):
    s_hat, config = _load_inputs(args)
    d = clamp_eigenvalues(eig_hermitian(normalize(s_hat, config.sigma2)).d)
    solver, gauge = solver_for(config.norm)
    sol = solver(d, config.kappa)
    u_grid, obj_grid = oracle_scan(gauge, d, config.kappa, args.grid_points)
    step = (max(1.0, d[0]) * (1 + 1e-6) - 1.0 / config.kappa) / (args.grid_points - 1)
    print(f"eigenvalues d = {json.dumps([float(x) for x in d])}")
    print(f"solver: u* = {sol.u_star!r} objective = {sol.objective!r} branch = {sol.branch.value}")
    print(f"grid:   u  = {u_grid!r} objective = {obj_grid!r} (points {args.grid_points}, step {step:.3e})")
    agree = sol.objective <= obj_grid + 1e-6 * (1.0 + obj_grid)
    print(f"|du| = {abs(sol.u_star - u_grid):.3e}; solver objective <= grid objective: {'yes' if agree else 'NO'}")
    return EXIT_OK if agree else EXIT_NUMERIC


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        handler = {"run": _cmd_run, "project": _cmd_project, "oracle": _cmd_oracle}[args.cmd]
        return handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IndefiniteMatrixError, FpeConvergenceError, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
