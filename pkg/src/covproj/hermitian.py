"""Dense complex Hermitian matrix helpers.

Matrices are plain ``numpy`` arrays of shape ``(n, n)`` and dtype
``complex128``. :func:`as_hermitian` is the single ingest point: it checks
symmetry and returns ``(A + A^H) / 2``, which is Hermitian to the last bit.
"""

import json
from typing import NamedTuple

import numpy as np

from covproj import _constants as C


class SpectralDecomposition(NamedTuple):
    """Eigenvectors ``u`` (columns) and eigenvalues ``d`` sorted descending."""

    u: np.ndarray
    d: np.ndarray

    def reconstruct(self):
        return (self.u * self.d) @ self.u.conj().T


class NotHermitianError(ValueError):
    pass


class IndefiniteMatrixError(ValueError):
    pass


def H(a):
    """Conjugate transpose."""
    return np.conj(np.swapaxes(a, -1, -2))


def as_hermitian(a, tol=C.HERMITIAN_INGEST_TOL):
    """Validate ``a`` as Hermitian within ``tol`` (relative) and symmetrize it.

    Raises
    ------
    NotHermitianError
        If ``a`` is not square, has non-finite entries, or
        ``max|a - a^H| > tol * max(1, max|a|)``.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotHermitianError("matrix has non-finite entries")
    if a.size == 0:
        raise NotHermitianError("empty matrix")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - H(a))))
    if asym > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e})")
    return 0.5 * (a + H(a))


def _stack_data(data):
    x = np.asarray(data, dtype=np.complex128)
    if x.ndim == 1:
        if x.size == 0:
            raise ValueError("empty data set")
        raise ValueError("data must be a sequence of vectors (2-D array, one row per datum)")
    if x.ndim != 2:
        raise ValueError(f"data must be 2-D (K, n), got shape {x.shape}")
    if x.shape[0] == 0:
        raise ValueError("empty data set")
    if x.shape[1] == 0:
        raise ValueError("data vectors have zero length")
    return x


def stack_data(data):
    """Coerce ``K`` complex ``n``-vectors into a ``(K, n)`` array.

    Ragged input (vectors of different lengths) is rejected.
    """
    if isinstance(data, np.ndarray):
        return _stack_data(data)
    rows = list(data)
    if not rows:
        raise ValueError("empty data set")
    lengths = {np.asarray(r).reshape(-1).shape[0] for r in rows}
    if len(lengths) != 1:
        raise ValueError(f"dimension mismatch among data vectors: lengths {sorted(lengths)}")
    return _stack_data(np.array([np.asarray(r, dtype=np.complex128).reshape(-1) for r in rows]))


def sample_covariance(data):
    """Sample covariance ``(1/K) sum_i r_i r_i^H`` of the rows of ``data``."""
    x = stack_data(data)
    k = x.shape[0]
    s = (x.T @ x.conj()) / k
    return 0.5 * (s + H(s))


def eig_hermitian(a):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    LAPACK ``heevd`` through :func:`numpy.linalg.eigh`; the call is
    deterministic for identical input bits.
    """
    a = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise np.linalg.LinAlgError("eig_hermitian: non-finite input")
    d, u = np.linalg.eigh(a)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(u))):
        raise np.linalg.LinAlgError("eig_hermitian: eigensolver returned non-finite values")
    return SpectralDecomposition(u[:, ::-1].copy(), d[::-1].copy())


def clamp_eigenvalues(d, rel=C.PSD_CLAMP_REL):
    """Zero out small negative eigenvalues of a numerically PSD spectrum.

    ``d`` must be sorted descending. Entries in ``[-rel * scale, 0)`` become 0
    where ``scale = max|d|``; anything lower raises :class:`IndefiniteMatrixError`.
    """
    d = np.array(d, dtype=float)
    if d.size == 0:
        return d
    scale = float(np.max(np.abs(d)))
    neg = d < 0
    if np.any(d < -rel * scale):
        raise IndefiniteMatrixError(
            f"matrix is indefinite: min eigenvalue {d.min():.3e} (scale {scale:.3e})"
        )
    d[neg] = 0.0
    return d


def psd_factor(a):
    """Return ``F`` with ``F F^H = a`` for a PSD ``a``.

    Eigenvalues within ``PSD_CLAMP_REL * ||a||_2`` of zero (either sign) are
    treated as exact zeros, so a rank-r input yields a rank-r factor.
    """
    a = np.asarray(a, dtype=np.complex128)
    dec = eig_hermitian(a)
    d = dec.d
    norm2 = float(np.max(np.abs(d))) if d.size else 0.0
    if d.size and d[-1] < -C.PSD_INDEFINITE_REL * norm2:
        raise IndefiniteMatrixError(
            f"psd_factor: min eigenvalue {d[-1]:.3e} below -{C.PSD_INDEFINITE_REL:g}*||a||_2"
        )
    d = np.where(d > C.PSD_CLAMP_REL * norm2, d, 0.0)
    return dec.u * np.sqrt(d)


def _pinv_from_eig(dec):
    d = dec.d
    n = d.shape[0]
    cutoff = n * C.PINV_REL_PER_DIM * max(float(d[0]), 0.0) if n else 0.0
    inv = np.zeros_like(d)
    keep = d > cutoff
    inv[keep] = 1.0 / d[keep]
    return inv


def pseudo_inverse(m):
    """Moore-Penrose pseudo-inverse through the spectral decomposition.

    Eigenvalues at or below ``n * 1e-12 * d_1`` are treated as zero.
    """
    dec = eig_hermitian(m)
    inv = _pinv_from_eig(dec)
    p = (dec.u * inv) @ dec.u.conj().T
    return 0.5 * (p + H(p))


def solve_weight(m, s):
    """Adaptive weight ``w = m^{-1} s``.

    Falls back to ``pinv(m) s`` when ``m`` is singular, so a rank deficient
    sample covariance (K < n) still yields a weight. ``s`` may be a vector or an
    ``(n, G)`` matrix of steering vectors.
    """
    return solve_weight_eig(eig_hermitian(m), s)


def solve_weight_eig(dec, s):
    """:func:`solve_weight` when the decomposition is already available."""
    inv = _pinv_from_eig(dec)
    s = np.asarray(s, dtype=np.complex128)
    coef = dec.u.conj().T @ s
    if coef.ndim == 1:
        return dec.u @ (inv * coef)
    return dec.u @ (inv[:, None] * coef)


def matrix_to_json(a):
    a = np.asarray(a, dtype=np.complex128)
    return {
        "n": int(a.shape[0]),
        "re": [float(x) for x in a.real.reshape(-1)],
        "im": [float(x) for x in a.imag.reshape(-1)],
    }


def matrix_from_json(obj):
    """Parse the ``{"n", "re", "im"}`` interchange object into a Hermitian array."""
    if not isinstance(obj, dict):
        raise ValueError("matrix JSON must be an object with fields n, re, im")
    for key in ("n", "re", "im"):
        if key not in obj:
            raise ValueError(f"matrix JSON is missing field '{key}'")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"matrix JSON field 'n' must be a positive integer, got {n!r}")
    re, im = obj["re"], obj["im"]
    for key, vals in (("re", re), ("im", im)):
        if not isinstance(vals, list) or len(vals) != n * n:
            raise ValueError(f"matrix JSON field '{key}' must be a list of n*n = {n * n} numbers")
    a = np.array(re, dtype=float).reshape(n, n) + 1j * np.array(im, dtype=float).reshape(n, n)
    return as_hermitian(a)


def load_matrix(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return matrix_from_json(obj)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_matrix(path, a):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(a), fh)
        fh.write("\n")
