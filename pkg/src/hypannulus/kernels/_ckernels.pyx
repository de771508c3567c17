# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Horner evaluation of power-series tables."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def power_series(coeffs, x, kmax):
    cdef double complex[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef long long[::1] km = np.ascontiguousarray(kmax, dtype=np.int64)
    cdef Py_ssize_t L = c.shape[0], T = xv.shape[0]
    val = np.empty((L, T), dtype=np.complex128)
    der = np.empty((L, T), dtype=np.complex128)
    cdef double complex[:, ::1] v = val
    cdef double complex[:, ::1] d = der
    cdef Py_ssize_t l, j, k, n
    cdef double xj
    cdef double complex s, ds
    for l in range(L):
        for j in range(T):
            xj = xv[j]
            n = km[j]
            s = 0.0
            ds = 0.0
            for k in range(n - 1, 0, -1):
                s = s * xj + c[l, k]
                ds = ds * xj + k * c[l, k]
            s = s * xj + c[l, 0]
            v[l, j] = s
            d[l, j] = ds
    return val, der
