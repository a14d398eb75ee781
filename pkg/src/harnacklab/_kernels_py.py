"""Pure numpy versions of the compiled kernel loops (same signatures)."""
import numpy as np

# rows per block; bounds the (rows, m, d) temporaries
_BLOCK = 256


def _sqdist(x, y):
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kval(dist2, p, diag):
    with np.errstate(divide="ignore"):
        out = np.power(dist2, 0.5 * p)
    out[dist2 == 0.0] = diag
    return out


def pairwise_power(x, y, p, diag=np.inf):
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    out = np.empty((x.shape[0], y.shape[0]))
    for start in range(0, x.shape[0], _BLOCK):
        stop = start + _BLOCK
        out[start:stop] = _kval(_sqdist(x[start:stop], y), p, diag)
    return out


def potential(x, y, w, p, diag=np.inf):
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    keep = w != 0.0
    y, w = y[keep], w[keep]
    out = np.empty(x.shape[0])
    for start in range(0, x.shape[0], _BLOCK):
        stop = start + _BLOCK
        out[start:stop] = _kval(_sqdist(x[start:stop], y), p, diag) @ w
    return out


def minmax_weighted_power(x, w, z, p):
    x = np.ascontiguousarray(x, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    lo = np.empty(z.shape[0])
    hi = np.empty(z.shape[0])
    for start in range(0, z.shape[0], _BLOCK):
        stop = start + _BLOCK
        vals = _kval(_sqdist(z[start:stop], x), p, np.inf) * w[None, :]
        lo[start:stop] = vals.min(axis=1)
        hi[start:stop] = vals.max(axis=1)
    return lo, hi
