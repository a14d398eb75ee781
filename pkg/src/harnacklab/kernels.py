"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Setting ``HARNACKLAB_PURE=1`` forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("HARNACKLAB_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def _points(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    return a


def pairwise_power(x, y, p, diag=np.inf):
    """Matrix of |x_i - y_j|**p with ``diag`` at coincident pairs."""
    return _impl.pairwise_power(_points(x), _points(y), float(p), float(diag))


def potential(x, y, w, p, diag=np.inf):
    """sum_j w_j |x_i - y_j|**p without materializing the matrix."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _impl.potential(_points(x), _points(y), w, float(p), float(diag))


def minmax_weighted_power(x, w, z, p):
    """Per row z_k: (min_i, max_i) of w_i |x_i - z_k|**p."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _impl.minmax_weighted_power(_points(x), w, _points(z), float(p))
