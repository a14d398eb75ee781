# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise power-kernel loops.

Every routine evaluates k(x, y) = |x - y|**p and substitutes ``diag`` when
the two points coincide exactly.  The numpy fallback in ``_kernels_py`` has
the same signatures and must agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, INFINITY

cnp.import_array()


cdef inline double _kval(double dist2, double half_p, double diag) nogil:
    if dist2 == 0.0:
        return diag
    # Riesz d=3, alpha=1 and Newtonian d=3 hit these two branches
    if half_p == -1.0:
        return 1.0 / dist2
    if half_p == -0.5:
        return 1.0 / sqrt(dist2)
    return pow(dist2, half_p)


def pairwise_power(double[:, ::1] x, double[:, ::1] y, double p, double diag=INFINITY):
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], dim = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, t, half_p = 0.5 * p
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                s = 0.0
                for k in range(dim):
                    t = x[i, k] - y[j, k]
                    s = s + t * t
                o[i, j] = _kval(s, half_p, diag)
    return out


def potential(double[:, ::1] x, double[:, ::1] y, double[::1] w, double p,
              double diag=INFINITY):
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], dim = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, t, acc, half_p = 0.5 * p
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                if w[j] == 0.0:
                    continue
                s = 0.0
                for k in range(dim):
                    t = x[i, k] - y[j, k]
                    s = s + t * t
                acc = acc + w[j] * _kval(s, half_p, diag)
            o[i] = acc
    return out


def minmax_weighted_power(double[:, ::1] x, double[::1] w, double[:, ::1] z, double p):
    """For each row z_k return min_i and max_i of w_i * |x_i - z_k|**p."""
    cdef Py_ssize_t n = x.shape[0], m = z.shape[0], dim = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, t, v, lo, hi, half_p = 0.5 * p
    lo_arr = np.empty(m, dtype=np.float64)
    hi_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] lo_v = lo_arr
    cdef double[::1] hi_v = hi_arr
    with nogil:
        for j in range(m):
            lo = INFINITY
            hi = -INFINITY
            for i in range(n):
                s = 0.0
                for k in range(dim):
                    t = x[i, k] - z[j, k]
                    s = s + t * t
                v = w[i] * _kval(s, half_p, INFINITY)
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            lo_v[j] = lo
            hi_v[j] = hi
    return lo_arr, hi_arr
