# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: coordinate descent sweeps and the PAV projection.

Semantics match ``gtv._kernels._py`` exactly; see that module for the
reference implementations.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def enet_cd(double[::1, :] X, double[::1] y, double l1, double l2,
            double[::1] beta, int max_sweeps, double tol):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef double[::1] resid = np.array(y, copy=True)
    cdef double[::1] col_sq = np.zeros(p)
    cdef double scale = 2.0 / n
    cdef Py_ssize_t i, j, sweeps
    cdef double c, b_old, b_new, delta, max_delta, denom

    for j in range(p):
        c = 0.0
        for i in range(n):
            c += X[i, j] * X[i, j]
        col_sq[j] = c
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(n):
                resid[i] -= X[i, j] * beta[j]

    max_delta = np.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            denom = scale * col_sq[j] + 2.0 * l2
            if denom <= 0.0:
                continue
            b_old = beta[j]
            c = 0.0
            for i in range(n):
                c += X[i, j] * resid[i]
            c = scale * c + scale * col_sq[j] * b_old
            if c > l1:
                b_new = (c - l1) / denom
            elif c < -l1:
                b_new = (c + l1) / denom
            else:
                b_new = 0.0
            delta = b_new - b_old
            if delta != 0.0:
                for i in range(n):
                    resid[i] -= delta * X[i, j]
                beta[j] = b_new
                if fabs(delta) > max_delta:
                    max_delta = fabs(delta)
        if max_delta <= tol:
            break
    return sweeps, max_delta


def pav_nonincreasing(double[::1] v):
    cdef Py_ssize_t n = v.shape[0]
    cdef double[::1] sums = np.empty(n)
    cdef double[::1] means = np.empty(n)
    cdef cnp.intp_t[::1] counts = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t top = -1
    cdef Py_ssize_t i, b, pos
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr

    for i in range(n):
        top += 1
        sums[top] = v[i]
        counts[top] = 1
        means[top] = v[i]
        while top > 0 and means[top] > means[top - 1]:
            sums[top - 1] += sums[top]
            counts[top - 1] += counts[top]
            means[top - 1] = sums[top - 1] / counts[top - 1]
            top -= 1
    pos = 0
    for b in range(top + 1):
        for i in range(counts[b]):
            out[pos + i] = means[b]
        pos += counts[b]
    return out_arr
