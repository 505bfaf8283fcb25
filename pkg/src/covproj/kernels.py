"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``COVPROJ_PURE=1`` to
force the numpy fallback.
"""

import os

from covproj import _purekernels as pure

try:
    if os.environ.get("COVPROJ_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from covproj import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = pure
    BACKEND = "python"

GAUGE_EUCLID = pure.GAUGE_EUCLID
GAUGE_MAX = pure.GAUGE_MAX
GAUGE_SUM = pure.GAUGE_SUM

lambda_of_u_vec = _impl.lambda_of_u_vec
grid_scan = _impl.grid_scan
frobenius_interior = _impl.frobenius_interior
sinr_batch = _impl.sinr_batch


def compiled():
    """The compiled module, or ``None`` if it is not available."""
    try:
        from covproj import _kernels
    except ImportError:
        return None
    return _kernels
