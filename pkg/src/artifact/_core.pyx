# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Must stay numerically interchangeable with ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

# kind codes shared with _fallback
cdef enum:
    U_IDENTITY = 0
    U_POWER = 1
    W_IDENTITY = 0
    W_POWER = 1
    W_TK = 2


cdef inline double _utility(int kind, double par, double x) nogil:
    if x <= 0.0:
        return 0.0
    if kind == U_POWER:
        return pow(x, par)
    return x


cdef inline double _weight(int kind, double eta, double p) nogil:
    cdef double num, den
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    if kind == W_POWER:
        return pow(p, eta)
    if kind == W_TK:
        num = pow(p, eta)
        den = pow(num + pow(1.0 - p, eta), 1.0 / eta)
        return num / den
    return p


def weight_array(int kind, double eta, p):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t i, n = pv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _weight(kind, eta, pv[i])
    return out


def cpt_sorted_sum(xs_sorted, double b,
                   int up_kind, double up_par, int um_kind, double um_par,
                   int wp_kind, double wp_par, int wm_kind, double wm_par):
    """Order-statistics CPT sum over ascending samples; returns (gain, loss).

    Summation by parts: each utility increment between consecutive order
    statistics is weighted by the weighted empirical tail probability.
    """
    cdef double[::1] x = np.ascontiguousarray(xs_sorted, dtype=np.float64)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double dn = <double>n
    cdef double gain = 0.0, loss = 0.0, u, prev = 0.0, nxt
    with nogil:
        for i in range(n):
            u = _utility(up_kind, up_par, x[i] - b)
            if u != prev:
                gain += _weight(wp_kind, wp_par, (dn - i) / dn) * (u - prev)
                prev = u
        prev = 0.0
        for i in range(n - 1, -1, -1):
            u = _utility(um_kind, um_par, b - x[i])
            if u != prev:
                loss += _weight(wm_kind, wm_par, (i + 1) / dn) * (u - prev)
                prev = u
    return gain, loss


def quadratic(theta, A, bvec):
    cdef double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bvec, dtype=np.float64)
    cdef Py_ssize_t i, j, n = t.shape[0]
    cdef double acc = 0.0, row
    with nogil:
        for i in range(n):
            row = 0.0
            for j in range(n):
                row += a[i, j] * t[j]
            acc += t[i] * row + bv[i] * t[i]
    return acc


def rosenbrock(theta):
    cdef double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t i, n = t.shape[0]
    cdef double acc = 0.0, u, v
    with nogil:
        for i in range(n - 1):
            u = t[i + 1] - t[i] * t[i]
            v = 1.0 - t[i]
            acc += 100.0 * u * u + v * v
    return acc
