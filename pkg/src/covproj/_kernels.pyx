# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``covproj._purekernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

GAUGE_EUCLID = 0
GAUGE_MAX = 1
GAUGE_SUM = 2


cdef inline double _lam(double di, double u, double kappa) nogil:
    cdef double a = u if u > 1.0 else 1.0
    cdef double x = di if di > a else a
    cdef double b = kappa * u
    if b < 1.0:  # kappa * (1 / kappa) may round below 1
        b = 1.0
    return b if b < x else x


def lambda_of_u_vec(d, double u, double kappa):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    for i in range(n):
        ov[i] = _lam(dv[i], u, kappa)
    return out


def grid_scan(d, double kappa, double lo, double hi, Py_ssize_t npts, int gauge):
    if gauge < 0 or gauge > 2:
        raise ValueError(f"unknown gauge code {gauge}")
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], i, k
    cdef double step = (hi - lo) / (npts - 1)
    cdef double best_val = INFINITY, best_u = lo
    cdef double u, acc, h
    with nogil:
        for k in range(npts):
            u = lo + step * <double>k
            acc = 0.0
            for i in range(n):
                h = fabs(_lam(dv[i], u, kappa) - dv[i])
                if gauge == 0:
                    acc = acc + h * h
                elif gauge == 1:
                    if h > acc:
                        acc = h
                else:
                    acc = acc + h
            if acc < best_val:
                best_val = acc
                best_u = u
    if gauge == 0:
        best_val = sqrt(best_val)
    return best_u, best_val


cdef double _g1(const double[::1] d, double kappa, double u) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, h
    for i in range(d.shape[0]):
        h = _lam(d[i], u, kappa) - d[i]
        acc += h * h
    return acc


def frobenius_interior(d, double kappa):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], i
    cdef Py_ssize_t nbar = 0
    for i in range(n):
        if dv[i] > 1.0:
            nbar += 1
    v_arr = np.empty(nbar + 2)
    prefix_arr = np.zeros(n + 1)
    suffix_arr = np.zeros(n + 1)
    cdef double[::1] v = v_arr
    cdef double[::1] prefix = prefix_arr
    cdef double[::1] suffix = suffix_arr
    v[0] = INFINITY
    for i in range(nbar):
        v[i + 1] = dv[i]
    v[nbar + 1] = 1.0
    for i in range(n):
        prefix[i + 1] = prefix[i] + dv[i]
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + dv[i]

    cdef double k2 = kappa * kappa
    cdef Py_ssize_t alpha = 2, beta = 1
    cdef double u, lo_a, hi_a, lo_b, hi_b, lo, hi, uc, g
    cdef double best_g = INFINITY, best_u = 0.0
    cdef Py_ssize_t best_a = -1, best_b = -1

    while alpha <= nbar + 1 and v[alpha] >= v[beta] / kappa:
        alpha += 1
    while alpha <= nbar + 1 and beta <= nbar:
        u = (kappa * prefix[beta] + suffix[alpha - 1]) / (n - alpha + 1 + beta * k2)
        lo_a = v[alpha]
        hi_a = v[alpha - 1]
        lo_b = v[beta + 1] / kappa
        hi_b = v[beta] / kappa
        if lo_a < u <= hi_a and lo_b <= u < hi_b:
            return u, int(alpha), int(beta), True
        lo = lo_a if lo_a > lo_b else lo_b
        hi = hi_a if hi_a < hi_b else hi_b
        if lo <= hi:
            uc = u
            if uc < lo:
                uc = lo
            if uc > hi:
                uc = hi
            g = _g1(dv, kappa, uc)
            if g < best_g or (g == best_g and uc < best_u):
                best_g = g
                best_u = uc
                best_a = alpha
                best_b = beta
        if lo_b < lo_a:
            alpha += 1
        else:
            beta += 1
    if best_a < 0:
        raise RuntimeError("frobenius_interior: no admissible (alpha, beta) interval")
    return best_u, int(best_a), int(best_b), False


def sinr_batch(w, s, m):
    cdef const double complex[:, ::1] wv = np.ascontiguousarray(w, dtype=np.complex128)
    cdef const double complex[:, ::1] sv = np.ascontiguousarray(s, dtype=np.complex128)
    cdef const double complex[:, ::1] mv = np.ascontiguousarray(m, dtype=np.complex128)
    cdef Py_ssize_t n = wv.shape[0], G = wv.shape[1], g, i, j
    out = np.zeros(G)
    cdef double[::1] ov = out
    cdef double complex num, mw, den
    with nogil:
        for g in range(G):
            num = 0
            den = 0
            for i in range(n):
                num = num + wv[i, g].conjugate() * sv[i, g]
                mw = 0
                for j in range(n):
                    mw = mw + mv[i, j] * wv[j, g]
                den = den + wv[i, g].conjugate() * mw
            if den.real > 0:
                ov[g] = (num.real * num.real + num.imag * num.imag) / den.real
    return out
