"""Projection of a sample covariance onto the structured, condition-number
constrained set under a unitarily invariant norm.

The projection shares the eigenvectors of the normalized sample covariance
``S = S_hat / sigma2`` and remaps its eigenvalues ``d`` to::

    lambda_i(u) = min(kappa * u, max(d_i, max(1, u)))

where ``u`` is the lowest minimizer over ``u >= 1/kappa`` of
``g(|lambda(u) - d|)`` and ``g`` is the gauge of the norm. Frobenius and
spectral norms have closed-form ``u``; any other gauge goes through a
one-dimensional convex search.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from covproj import _constants as C
from covproj import kernels
from covproj.hermitian import as_hermitian, clamp_eigenvalues, eig_hermitian


class Branch(str, enum.Enum):
    """Which case of the closed-form solution produced ``u_star``."""

    DEGENERATE_ZERO = "degenerate-zero"
    KAPPA_ONE = "kappa-one"
    FRO_SHORTCUT = "fro:d1<=kappa"
    FRO_ENDPOINT_ONE = "fro:endpoint-1"
    FRO_ENDPOINT_D1 = "fro:endpoint-d1"
    FRO_CASE3 = "fro:case-3"
    FRO_INTERIOR = "fro:interior-alpha-beta"
    SPEC_CASE1 = "spec:case-1"
    SPEC_CASE2 = "spec:case-2"
    SPEC_CASE3 = "spec:case-3"
    SPEC_CASE4A = "spec:case-4a"
    SPEC_CASE4B = "spec:case-4b"
    SPEC_CASE5A = "spec:case-5a"
    SPEC_CASE5B = "spec:case-5b"
    GENERIC = "generic"


class Gauge:
    """Symmetric monotone norm on nonnegative vectors.

    ``fn`` maps a 1-D array to a float. ``batch`` optionally maps a 2-D array
    (one vector per row) to a 1-D array and is only used by the grid oracle.
    ``kernel`` is the compiled-kernel code for the built-in gauges.
    The callables must be pure: they may be invoked concurrently.
    """

    def __init__(self, name, fn, batch=None, kernel=None):
        self.name = name
        self.fn = fn
        self._batch = batch
        self.kernel = kernel

    def __call__(self, h):
        return float(self.fn(np.asarray(h, dtype=float)))

    def batch(self, hs):
        if self._batch is not None:
            return np.asarray(self._batch(hs), dtype=float)
        return np.array([self.fn(row) for row in hs], dtype=float)

    def __repr__(self):
        return f"Gauge({self.name!r})"


EUCLIDEAN = Gauge(
    "euclid",
    lambda h: math.sqrt(float(np.dot(h, h))),
    lambda hs: np.sqrt(np.sum(hs * hs, axis=-1)),
    kernels.GAUGE_EUCLID,
)
MAXIMUM = Gauge("max", lambda h: float(np.max(h)), lambda hs: np.max(hs, axis=-1), kernels.GAUGE_MAX)


def ky_fan(k=None):
    """Ky Fan ``k`` gauge: sum of the ``k`` largest entries (all entries if None)."""
    if k is None:
        return Gauge("kyfan", lambda h: float(np.sum(h)), lambda hs: np.sum(hs, axis=-1), kernels.GAUGE_SUM)
    if k < 1:
        raise ValueError("Ky Fan order must be >= 1")

    def fn(h):
        return float(np.sum(np.sort(h)[::-1][:k]))

    def batch(hs):
        return np.sum(np.sort(hs, axis=-1)[:, ::-1][:, :k], axis=-1)

    return Gauge(f"kyfan:{k}", fn, batch)


NormSpec = Union[str, Gauge]

_NORM_ALIASES = {
    "fro": "fro", "frobenius": "fro", "fne": "fro",
    "spectral": "spectral", "spec": "spectral", "sne": "spectral",
}


def resolve_gauge(name):
    """Gauge from a registry-style name: ``euclid``, ``max``, ``kyfan``, ``kyfan:<k>``."""
    if isinstance(name, Gauge):
        return name
    if name in ("euclid", "euclidean", "fro", "frobenius", "fne"):
        return EUCLIDEAN
    if name in ("max", "spectral", "sne"):
        return MAXIMUM
    if name in ("kyfan", "trace", "nuclear", "sum"):
        return ky_fan()
    if name.startswith("kyfan:"):
        try:
            k = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad Ky Fan order in {name!r}") from None
        return ky_fan(k)
    raise ValueError(f"unknown gauge {name!r}")


@dataclass(frozen=True)
class ProjectionConfig:
    sigma2: float
    kappa: float
    norm: NormSpec = "fro"

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be a positive finite number, got {self.sigma2}")
        if not (self.kappa >= 1 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 1, got {self.kappa}")


@dataclass(frozen=True)
class ShrinkageSolution:
    u_star: float
    lambda_star: np.ndarray = field(repr=False)
    objective: float
    branch: Branch


def normalize(s_hat, sigma2):
    """``S_hat / sigma2``."""
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    return np.asarray(s_hat, dtype=np.complex128) / sigma2


def _check_u(u, kappa):
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if u < 1.0 / kappa:
        raise ValueError(f"u = {u!r} is below 1/kappa = {1.0 / kappa!r}")


def lambda_of_u(d, u, kappa):
    """Shrunk eigenvalues ``min(kappa*u, max(d_i, max(1, u)))`` for a fixed ``u``."""
    _check_u(u, kappa)
    return kernels.lambda_of_u_vec(np.asarray(d, dtype=float), float(u), float(kappa))


def h_of_u(d_i, u, kappa):
    """``|lambda_i(u) - d_i|`` by its piecewise closed form."""
    _check_u(u, kappa)
    if d_i > 1:
        if u < d_i / kappa:
            return d_i - max(kappa * u, 1.0)
        if u < d_i:
            return 0.0
        return u - d_i
    if u < 1:
        return 1.0 - d_i
    return u - d_i


def _prepare(d, kappa):
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("empty eigenvalue vector")
    if not np.all(np.isfinite(d)):
        raise ValueError("eigenvalues must be finite")
    if not (kappa >= 1 and math.isfinite(kappa)):
        raise ValueError(f"kappa must be finite and >= 1, got {kappa}")
    if np.any(np.diff(d) > 0):
        raise ValueError("eigenvalues must be sorted in descending order")
    return clamp_eigenvalues(d)


def _solution(d, u, kappa, branch, gauge):
    lam = kernels.lambda_of_u_vec(d, float(u), float(kappa))
    return ShrinkageSolution(float(u), lam, gauge(np.abs(lam - d)), branch)


def _degenerate(d, kappa, gauge):
    return _solution(d, 1.0 / kappa, kappa, Branch.DEGENERATE_ZERO, gauge)


def solve_u_frobenius(d, kappa):
    """Frobenius-norm solution (``u`` minimizing ``sum_i h_i(u)^2``).

    ``objective`` reports the Frobenius distance, i.e. the square root of the
    sum of squares.
    """
    d = _prepare(d, kappa)
    if d[0] <= 0:
        return _degenerate(d, kappa, EUCLIDEAN)
    if kappa == 1:
        return _solution(d, max(1.0, float(np.mean(d))), kappa, Branch.KAPPA_ONE, EUCLIDEAN)
    d1, dn = float(d[0]), float(d[-1])
    if d1 <= kappa:
        return _solution(d, max(1.0, d1) / kappa, kappa, Branch.FRO_SHORTCUT, EUCLIDEAN)

    # one-sided derivatives of G1 on [1, d1]
    slope_at_1 = -2.0 * kappa * float(np.sum(d[d > kappa] - kappa)) + 2.0 * float(np.sum(1.0 - d[d <= 1.0]))
    slope_at_d1 = 2.0 * float(np.sum(d1 - d))
    if slope_at_1 >= 0:
        return _solution(d, 1.0, kappa, Branch.FRO_ENDPOINT_ONE, EUCLIDEAN)
    if d1 > dn and slope_at_d1 <= 0:
        return _solution(d, d1, kappa, Branch.FRO_ENDPOINT_D1, EUCLIDEAN)
    if d1 / kappa <= dn:
        return _solution(d, d1 / kappa, kappa, Branch.FRO_CASE3, EUCLIDEAN)
    u, _, _, _ = kernels.frobenius_interior(d, float(kappa))
    return _solution(d, u, kappa, Branch.FRO_INTERIOR, EUCLIDEAN)


def solve_u_spectral(d, kappa):
    """Spectral-norm solution (``u`` minimizing ``max_i h_i(u)``), lowest minimizer."""
    d = _prepare(d, kappa)
    if d[0] <= 0:
        return _degenerate(d, kappa, MAXIMUM)
    d1, dn = float(d[0]), float(d[-1])
    if kappa == 1:
        return _solution(d, max(1.0, 0.5 * (d1 + dn)), kappa, Branch.KAPPA_ONE, MAXIMUM)
    if d1 <= 1:
        u, branch = 1.0 / kappa, Branch.SPEC_CASE1
    elif d1 <= kappa:
        if dn <= 1:
            u, branch = max((d1 + dn - 1.0) / kappa, 1.0 / kappa), Branch.SPEC_CASE2
        else:
            u, branch = d1 / kappa, Branch.SPEC_CASE3
    elif dn <= 1:
        eta = (d1 + dn - 1.0) / kappa
        if eta <= 1:
            u, branch = max(eta, 1.0 / kappa), Branch.SPEC_CASE4A
        else:
            u, branch = (d1 + dn) / (1.0 + kappa), Branch.SPEC_CASE4B
    elif dn <= d1 / kappa:
        u, branch = (d1 + dn) / (1.0 + kappa), Branch.SPEC_CASE5A
    else:
        u, branch = d1 / kappa, Branch.SPEC_CASE5B
    return _solution(d, u, kappa, branch, MAXIMUM)


# ---------------------------------------------------------------------------
# generic gauge

def _objective_fn(gauge, d, kappa):
    def f(u):
        lam = np.minimum(max(kappa * u, 1.0), np.maximum(d, max(1.0, u)))
        val = gauge(np.abs(lam - d))
        if not (val >= 0 and math.isfinite(val)):
            raise ValueError(f"gauge {gauge!r} returned {val!r}; it must be finite and nonnegative")
        return val
    return f


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f, a, b, tol):
    c = b - _INVPHI * (b - a)
    e = a + _INVPHI * (b - a)
    fc, fe = f(c), f(e)
    while b - a > tol:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _INVPHI * (b - a)
            fe = f(e)
    u = c if fc <= fe else e
    return u, min(fc, fe)


def _left_edge(f, p, u, fu, tol, noise):
    """Lowest point of ``[p, u]`` whose value is within the plateau threshold of ``fu``."""
    thr = fu + C.GENERIC_PLATEAU_REL * (1.0 + fu) + noise
    fp = f(p)
    if fp <= thr:
        return p, fp
    lo, hi, fhi = p, u, fu
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm <= thr:
            hi, fhi = mid, fm
        else:
            lo = mid
    return hi, fhi


def _quadratic_candidate(f, p, q):
    """Exact minimizer of ``f`` on ``[p, q]`` if ``f^2`` is a quadratic there.

    On a segment between consecutive kinks the residual vector is affine in
    ``u``, so ``f^2`` is exactly quadratic for the Euclidean gauge. The model
    is fitted on three points and validated on six more; ``None`` if the
    check fails.
    """
    ts = np.linspace(0.0, 1.0, 9)
    us = p + (q - p) * ts
    us[-1] = q
    vals = np.array([f(x) for x in us])
    ys = vals * vals
    y0, ym, y1 = ys[0], ys[4], ys[8]
    a = 2.0 * (y1 - 2.0 * ym + y0)
    b = y1 - y0 - a
    scale = 1.0 + float(np.max(np.abs(ys)))
    model = a * ts * ts + b * ts + y0
    if np.max(np.abs(model - ys)) > C.GENERIC_QUAD_CHECK_REL * scale:
        return None
    tiny = 64.0 * np.finfo(float).eps * scale
    if a > tiny:
        t = min(max(-b / (2.0 * a), 0.0), 1.0)
    elif b < -tiny:
        t = 1.0
    else:
        t = 0.0  # flat or increasing: lowest point of the segment
    u = q if t == 1.0 else p + (q - p) * t
    return u, f(u)


def _segment_min(f, p, q, tol, noise):
    if q - p <= tol:
        return p, f(p)
    quad = _quadratic_candidate(f, p, q)
    ug, fg = _golden(f, p, q, tol)
    ug, fg = _left_edge(f, p, ug, fg, tol, noise)
    if quad is not None and quad[1] <= fg + C.GENERIC_TIE_REL * (1.0 + fg) + noise:
        return quad
    return ug, fg


def _better(cand, best, noise):
    """True if ``cand`` improves on ``best``; ties resolve to the lower ``u``.

    ``noise`` is the absolute round-off level of the objective.
    """
    if best is None:
        return True
    tie = C.GENERIC_TIE_REL * (1.0 + abs(best[1])) + noise
    if cand[1] < best[1] - tie:
        return True
    return abs(cand[1] - best[1]) <= tie and cand[0] < best[0]


def solve_u_generic(gauge, d, kappa):
    """Lowest minimizer of ``g(|lambda(u) - d|)`` over ``[1/kappa, max(1, d1)]``.

    The range is split at the kinks ``{1, d_i, d_i/kappa}`` of the residual
    vector. Around the best kink each segment is minimized by golden-section
    search with a leftward bisection onto the start of any optimal plateau,
    plus an exact vertex when the squared objective is quadratic there.
    """
    gauge = resolve_gauge(gauge) if isinstance(gauge, str) else gauge
    if not isinstance(gauge, Gauge):
        gauge = Gauge(getattr(gauge, "__name__", "custom"), gauge)
    d = _prepare(d, kappa)
    if d[0] <= 0:
        return _degenerate(d, kappa, gauge)
    kappa = float(kappa)
    f = _objective_fn(gauge, d, kappa)
    lo, hi = 1.0 / kappa, max(1.0, float(d[0]))
    tol = C.GENERIC_U_TOL
    noise = C.GENERIC_ROUNDOFF_ULPS * np.finfo(float).eps * hi
    pts = np.concatenate(([lo, hi, 1.0], d, d / kappa))
    bps = np.unique(pts[(pts >= lo) & (pts <= hi)])
    if bps.size == 1:
        return _solution(d, lo, kappa, Branch.GENERIC, gauge)
    vals = np.array([f(b) for b in bps])
    vmin = float(vals.min())
    j = int(np.argmax(vals <= vmin + C.GENERIC_TIE_REL * (1.0 + vmin) + noise))
    best = (float(bps[j]), float(vals[j]))
    for k in (j - 1, j):
        if 0 <= k < bps.size - 1:
            cand = _segment_min(f, float(bps[k]), float(bps[k + 1]), tol, noise)
            if _better(cand, best, noise):
                best = cand
    # extend left across segments on which the optimum stays flat
    k = int(np.searchsorted(bps, best[0]))
    while 0 < k < bps.size and bps[k] == best[0]:
        cand = _segment_min(f, float(bps[k - 1]), float(bps[k]), tol, noise)
        if not _better(cand, best, noise):
            break
        best = cand
        k -= 1
    u = max(best[0], lo)
    return _solution(d, u, kappa, Branch.GENERIC, gauge)


def solver_for(norm):
    """Map a norm name or gauge to ``(solver(d, kappa), gauge)``."""
    if isinstance(norm, str) and norm in _NORM_ALIASES:
        if _NORM_ALIASES[norm] == "fro":
            return solve_u_frobenius, EUCLIDEAN
        return solve_u_spectral, MAXIMUM
    gauge = resolve_gauge(norm) if isinstance(norm, str) else norm
    if not isinstance(gauge, Gauge):
        gauge = Gauge(getattr(norm, "__name__", "custom"), norm)
    return (lambda d, kappa: solve_u_generic(gauge, d, kappa)), gauge


def project_spectrum(dec, sigma2, kappa, norm="fro"):
    """Projection from a decomposition of the *normalized* sample covariance."""
    solver, _ = solver_for(norm)
    d = clamp_eigenvalues(dec.d)
    sol = solver(d, kappa)
    m = sigma2 * (dec.u * sol.lambda_star) @ dec.u.conj().T
    return 0.5 * (m + m.conj().T), sol


def project(s_hat, config):
    """Project ``s_hat`` onto the structured set.

    Returns ``(M_hat, ShrinkageSolution)`` where
    ``M_hat = sigma2 * U_S diag(lambda*) U_S^H`` and ``U_S`` are the
    eigenvectors of ``s_hat / sigma2``.
    """
    s = normalize(as_hermitian(s_hat), config.sigma2)
    return project_spectrum(eig_hermitian(s), config.sigma2, config.kappa, config.norm)


def oracle_u(gauge, d, kappa, grid_points=10**6):
    """Brute-force minimizer of ``g(|lambda(u) - d|)`` on a uniform grid.

    The grid spans ``[1/kappa, max(1, d1) * (1 + 1e-6)]``. Returns the lowest
    grid point attaining the minimum. Independent of the closed-form solvers;
    meant for verification only.
    """
    return oracle_scan(gauge, d, kappa, grid_points)[0]


def oracle_scan(gauge, d, kappa, grid_points=10**6):
    """Like :func:`oracle_u` but returns ``(u, objective)``."""
    gauge = resolve_gauge(gauge) if isinstance(gauge, str) else gauge
    if not isinstance(gauge, Gauge):
        gauge = Gauge("custom", gauge)
    grid_points = int(grid_points)
    if grid_points < C.ORACLE_MIN_POINTS:
        raise ValueError(f"grid_points must be >= {C.ORACLE_MIN_POINTS}")
    d = np.clip(np.asarray(d, dtype=float).reshape(-1), 0.0, None)
    kappa = float(kappa)
    lo = 1.0 / kappa
    hi = max(1.0, float(d[0])) * (1.0 + C.ORACLE_HI_PAD)
    if gauge.kernel is not None:
        return kernels.grid_scan(d, kappa, lo, hi, grid_points, gauge.kernel)
    step = (hi - lo) / (grid_points - 1)
    best_u, best_v = lo, np.inf
    for start in range(0, grid_points, 1 << 14):
        u = lo + step * np.arange(start, min(start + (1 << 14), grid_points), dtype=float)
        lam = np.minimum(np.maximum(kappa * u, 1.0)[:, None], np.maximum(d[None, :], np.maximum(1.0, u)[:, None]))
        vals = gauge.batch(np.abs(lam - d[None, :]))
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_u, best_v = float(u[i]), float(vals[i])
    return best_u, best_v
