"""Reference estimators: SCM, normalized SCM and the fixed-point estimator."""

from dataclasses import dataclass

import numpy as np

from covproj import _constants as C
from covproj.hermitian import H, sample_covariance, stack_data

FPE_INIT = "nscm"
FPE_NORMALIZATION = "trace = n"


class FpeConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FpeConfig:
    max_iter: int = C.FPE_MAX_ITER
    rel_tol: float = C.FPE_REL_TOL

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")


def scm(data):
    """Sample covariance matrix. Weights use the pseudo-inverse when K < n."""
    return sample_covariance(data)


def _energies(x):
    e = np.real(np.sum(x * x.conj(), axis=1))
    if np.any(e < C.NSCM_MIN_ENERGY):
        raise ValueError("degenerate datum: a secondary vector has (near-)zero energy")
    return e


def nscm(data):
    """Normalized sample covariance ``(n/K) sum_i r_i r_i^H / (r_i^H r_i)``; trace n."""
    x = stack_data(data)
    k, n = x.shape
    y = x / np.sqrt(_energies(x))[:, None]
    m = (n / k) * (y.T @ y.conj())
    return 0.5 * (m + H(m))


def _fixed_point_map(x, m):
    k, n = x.shape
    q = np.real(np.sum(np.linalg.solve(m, x.T) * x.T.conj(), axis=0))
    y = x / np.sqrt(q)[:, None]
    t = (n / k) * (y.T @ y.conj())
    return 0.5 * (t + H(t))


def fpe_residual(data, m):
    """Relative fixed-point residual ``||m - T(m)||_F / ||m||_F``."""
    x = stack_data(data)
    return float(np.linalg.norm(m - _fixed_point_map(x, m)) / np.linalg.norm(m))


def fpe(data, config=FpeConfig(), return_info=False):
    """Fixed-point (Tyler-type) estimator, trace normalized to ``n``.

    Iterates ``M <- (n/K) sum_i r_i r_i^H / (r_i^H M^{-1} r_i)`` from the NSCM,
    rescaling to trace ``n`` each step, until the fixed-point residual drops
    below ``rel_tol``. Requires ``K >= n``.

    Raises
    ------
    ValueError
        If ``K < n`` or a datum has zero energy.
    FpeConvergenceError
        If the residual is still above ``rel_tol`` after ``max_iter`` updates.
    """
    x = stack_data(data)
    k, n = x.shape
    if k < n:
        raise ValueError(f"fpe needs K >= n (got K={k}, n={n})")
    m = nscm(x)
    residuals = []
    for it in range(config.max_iter + 1):
        try:
            t = _fixed_point_map(x, m)
        except np.linalg.LinAlgError as exc:
            raise FpeConvergenceError(f"fpe: iterate became singular at step {it}") from exc
        res = float(np.linalg.norm(m - t) / np.linalg.norm(m))
        residuals.append(res)
        if res <= config.rel_tol:
            if return_info:
                return m, {"iterations": it, "residuals": residuals, "init": FPE_INIT,
                           "normalization": FPE_NORMALIZATION}
            return m
        if it == config.max_iter:
            break
        m = t * (n / np.real(np.trace(t)))
    raise FpeConvergenceError(
        f"fpe did not converge in {config.max_iter} iterations (residual {residuals[-1]:.3e})"
    )
