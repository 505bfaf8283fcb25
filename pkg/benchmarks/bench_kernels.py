"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on the same inputs through both backends; the script
checks the outputs agree and prints best-of-N wall times and the speedup.
"""

import argparse
import time

import numpy as np

from covproj import _purekernels as pure
from covproj import kernels
from covproj.projector import Branch, solve_u_frobenius


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(rng):
    d = np.sort(10.0 ** rng.uniform(-2, 4, 16))[::-1].copy()
    n, g = 8, 121
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = a @ a.conj().T + np.eye(n)
    s = np.exp(1j * np.pi * np.outer(np.arange(n), np.sin(np.linspace(-1, 1, g))))
    w = np.linalg.solve(m, s)
    ds = [np.sort(10.0 ** rng.uniform(-2, 4, 16))[::-1].copy() for _ in range(4000)]
    # the interior walk is only defined where the solver would reach it
    walk = [x for x in ds if solve_u_frobenius(x, 100.0).branch is Branch.FRO_INTERIOR][:2000]
    return [
        ("grid_scan euclid 1e6", lambda k: k.grid_scan(d, 100.0, 0.01, d[0], 10**6, pure.GAUGE_EUCLID)),
        ("grid_scan max 1e6", lambda k: k.grid_scan(d, 100.0, 0.01, d[0], 10**6, pure.GAUGE_MAX)),
        (f"frobenius_interior x{len(walk)}", lambda k: [k.frobenius_interior(x, 100.0)[0] for x in walk]),
        ("lambda_of_u_vec x2000", lambda k: [k.lambda_of_u_vec(x, 3.0, 100.0) for x in ds[:2000]]),
        ("sinr_batch n=8 G=121 x500", lambda k: [k.sinr_batch(w, s, m) for _ in range(500)]),
    ]


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    if isinstance(a, list):
        return all(_agree(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=0.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description="benchmark compiled vs pure kernels")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = kernels.compiled()
    if fast is None:
        print("compiled extension not built; only the pure backend is available")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s}  agree")
    for name, fn in _cases(rng):
        tc, oc = _best(lambda: fn(fast), args.repeat)
        tp, op = _best(lambda: fn(pure), args.repeat)
        print(f"{name:28s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}  {_agree(oc, op)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
