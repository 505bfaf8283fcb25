"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built or ``COVPROJ_PURE=1`` is set.
"""

import numpy as np

GAUGE_EUCLID = 0
GAUGE_MAX = 1
GAUGE_SUM = 2

_CHUNK = 1 << 15


def lambda_of_u_vec(d, u, kappa):
    d = np.asarray(d, dtype=float)
    # kappa * (1 / kappa) may round below 1
    return np.minimum(max(kappa * u, 1.0), np.maximum(d, max(1.0, u)))


def grid_scan(d, kappa, lo, hi, npts, gauge):
    """Minimize ``g(|lambda(u) - d|)`` over ``npts`` uniform points on [lo, hi].

    Returns ``(u, value)`` for the lowest grid index attaining the minimum.
    """
    d = np.ascontiguousarray(d, dtype=float)
    npts = int(npts)
    step = (hi - lo) / (npts - 1)
    best_val = np.inf
    best_u = lo
    for start in range(0, npts, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, npts), dtype=float)
        u = lo + step * k
        upper = np.maximum(kappa * u, 1.0)
        lam = np.minimum(upper[:, None], np.maximum(d[None, :], np.maximum(1.0, u)[:, None]))
        h = np.abs(lam - d[None, :])
        if gauge == GAUGE_EUCLID:
            val = np.sum(h * h, axis=1)
        elif gauge == GAUGE_MAX:
            val = np.max(h, axis=1)
        elif gauge == GAUGE_SUM:
            val = np.sum(h, axis=1)
        else:
            raise ValueError(f"unknown gauge code {gauge}")
        i = int(np.argmin(val))
        if val[i] < best_val:
            best_val = float(val[i])
            best_u = float(u[i])
    if gauge == GAUGE_EUCLID:
        best_val = float(np.sqrt(best_val))
    return best_u, best_val


def _g1(d, kappa, u):
    h = np.abs(lambda_of_u_vec(d, u, kappa) - d)
    return float(np.dot(h, h))


def frobenius_interior(d, kappa):
    """Interior stationary point of the Frobenius objective via the alpha/beta walk.

    ``d`` is sorted descending with ``d[0] > kappa > 1``. Indices follow the
    1-based convention of the vector ``v = [d_1, ..., d_Nbar, 1]``. Returns
    ``(u, alpha, beta, walked)``; ``walked`` is False when rounding made every
    interval test fail and the best candidate by objective was taken instead.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    nbar = int(np.count_nonzero(d > 1.0))
    v = np.empty(nbar + 2)
    v[0] = np.inf  # v_0 sentinel, never read as a bound that matters
    v[1:nbar + 1] = d[:nbar]
    v[nbar + 1] = 1.0
    prefix = np.concatenate(([0.0], np.cumsum(d)))          # prefix[b] = sum_{i<=b} d_i
    suffix = np.concatenate((np.cumsum(d[::-1])[::-1], [0.0]))  # suffix[a-1] = sum_{i>=a} d_i
    k2 = kappa * kappa

    def u_ab(a, b):
        return (kappa * prefix[b] + suffix[a - 1]) / (n - a + 1 + b * k2)

    beta = 1
    alpha = 2
    while alpha <= nbar + 1 and v[alpha] >= v[beta] / kappa:
        alpha += 1
    candidates = []
    while alpha <= nbar + 1 and beta <= nbar:
        u = u_ab(alpha, beta)
        lo_a, hi_a = v[alpha], v[alpha - 1]
        lo_b, hi_b = v[beta + 1] / kappa, v[beta] / kappa
        if lo_a < u <= hi_a and lo_b <= u < hi_b:
            return u, alpha, beta, True
        lo = max(lo_a, lo_b)
        hi = min(hi_a, hi_b)
        if lo <= hi:
            candidates.append((min(max(u, lo), hi), alpha, beta))
        if lo_b < lo_a:
            alpha += 1
        else:
            beta += 1
    if not candidates:
        raise RuntimeError("frobenius_interior: no admissible (alpha, beta) interval")
    best = min(candidates, key=lambda c: (_g1(d, kappa, c[0]), c[0]))
    return best[0], best[1], best[2], False


def sinr_batch(w, s, m):
    """Per-column ``|w^H s|^2 / (w^H m w)`` for ``(n, G)`` weights and steering vectors.

    Columns with ``w^H m w == 0`` return 0.
    """
    w = np.asarray(w, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    num = np.abs(np.sum(w.conj() * s, axis=0)) ** 2
    den = np.real(np.sum(w.conj() * (m @ w), axis=0))
    out = np.zeros(num.shape[0])
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out
