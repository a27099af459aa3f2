# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loop of the single-pass coefficient recursion.

Semantics match fallback.run_sgd: clamp each inner product to [-1, 1], apply
phi (kind 0 = power series, kind 1 = NTK recursion), accumulate sequentially.
"""

import numpy as np

from libc.math cimport M_PI, acos, sqrt


cdef inline double _clip1(double v) noexcept nogil:
    if v > 1.0:
        return 1.0
    if v < -1.0:
        return -1.0
    return v


cdef inline double _phi_ntk(double t, int depth) noexcept nogil:
    cdef double k_prev = t
    cdef double k_ntk = t
    cdef double k_next
    cdef int layer
    for layer in range(depth - 1):
        k_prev = _clip1(k_prev)
        k_next = (k_prev * (M_PI - acos(k_prev)) + sqrt(1.0 - k_prev * k_prev)) / M_PI
        k_ntk = k_ntk * ((M_PI - acos(k_prev)) / M_PI) + k_next
        k_prev = k_next
    return k_ntk


cdef inline double _phi_power(double t, const double* coeffs, Py_ssize_t ncoef) noexcept nogil:
    cdef double acc = coeffs[ncoef - 1]
    cdef Py_ssize_t j
    for j in range(ncoef - 2, -1, -1):
        acc = acc * t + coeffs[j]
    return acc


def run_sgd(X, y, etas, int kind, int depth, coeffs):
    """Coefficients a_1..a_n of the single-pass recursion (see fallback)."""
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(etas, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t dim = Xv.shape[1]
    cdef Py_ssize_t ncoef = cv.shape[0]
    a_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] a = a_arr
    cdef const double* cptr = NULL
    if ncoef > 0:
        cptr = &cv[0]
    cdef Py_ssize_t t, j, c
    cdef double dot, acc
    with nogil:
        for t in range(n):
            acc = 0.0
            for j in range(t):
                dot = 0.0
                for c in range(dim):
                    dot += Xv[j, c] * Xv[t, c]
                dot = _clip1(dot)
                if kind == 1:
                    acc += a[j] * _phi_ntk(dot, depth)
                else:
                    acc += a[j] * _phi_power(dot, cptr, ncoef)
            a[t] = -ev[t] * (acc - yv[t])
    return a_arr
