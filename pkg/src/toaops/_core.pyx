# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: 0F1 evaluation and weighted quadrature row sums."""

import numpy as np

from libc.math cimport fabs, sqrt, pow
from scipy.special.cython_special cimport i0, j0, i1, j1, iv, jv, gamma

cdef double SERIES_BOUND = 4.0
cdef double SERIES_POS_BOUND = 1e4
cdef int MAX_TERMS = 500


cdef inline double _series(double b, double z) noexcept nogil:
    cdef double term = 1.0
    cdef double total = 1.0
    cdef int k
    for k in range(1, MAX_TERMS + 1):
        term *= z / ((b + k - 1.0) * k)
        total += term
        if fabs(term) < 1e-16 * fabs(total):
            break
    return total


cdef inline double _hyp0f1(double b, double z) noexcept nogil:
    cdef double az = fabs(z)
    cdef double s
    if z == 0.0:
        return 1.0
    if az <= SERIES_BOUND:
        return _series(b, z)
    s = 2.0 * sqrt(az)
    if b == 1.0:
        if z > 0.0:
            return i0(s)
        return j0(s)
    if b == 2.0:
        if z > 0.0:
            return i1(s) / (0.5 * s)
        return j1(s) / (0.5 * s)
    if z > 0.0:
        if z <= SERIES_POS_BOUND:
            return _series(b, z)
        return gamma(b) * pow(0.5 * s, 1.0 - b) * iv(b - 1.0, s)
    return gamma(b) * pow(0.5 * s, 1.0 - b) * jv(b - 1.0, s)


def hyp0f1_scalar(double b, double z):
    return _hyp0f1(b, z)


def hyp0f1_array(double b, z):
    cdef const double[::1] zz = np.ascontiguousarray(z, dtype=np.float64).ravel()
    out = np.empty(zz.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(zz.shape[0]):
            o[i] = _hyp0f1(b, zz[i])
    return out.reshape(np.shape(z))


def weighted_rowsum(double b, z, g):
    """Return ``sum_i g[r, i] * 0F1(;b;z[r, i])`` for every row ``r``."""
    cdef const double[:, ::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[:, ::1] gg = np.ascontiguousarray(g, dtype=np.float64)
    if zz.shape[0] != gg.shape[0] or zz.shape[1] != gg.shape[1]:
        raise ValueError("z and g must have the same shape")
    out = np.empty(zz.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t r, i
    cdef double acc
    with nogil:
        for r in range(zz.shape[0]):
            acc = 0.0
            for i in range(zz.shape[1]):
                acc = acc + gg[r, i] * _hyp0f1(b, zz[r, i])
            o[r] = acc
    return out
