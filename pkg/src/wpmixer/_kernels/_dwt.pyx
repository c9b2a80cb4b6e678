# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled strided filter kernels; same contract as ``_fallback``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def down(x, f, Py_ssize_t n_out):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t rows = xv.shape[0], n = xv.shape[1], flen = fv.shape[0]
    out = np.zeros((rows, n_out))
    cdef double[:, ::1] yv = out
    cdef Py_ssize_t r, k, j, lo, hi, idx
    cdef double acc
    with nogil:
        for r in range(rows):
            for k in range(n_out):
                # taps j with 0 <= 2k + 1 - j < n
                lo = 2 * k + 2 - n
                if lo < 0:
                    lo = 0
                hi = 2 * k + 1
                if hi > flen - 1:
                    hi = flen - 1
                acc = 0.0
                for j in range(lo, hi + 1):
                    idx = 2 * k + 1 - j
                    acc += fv[j] * xv[r, idx]
                yv[r, k] = acc
    return out


def up(y, g, Py_ssize_t n_out):
    cdef const double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t rows = yv.shape[0], n = yv.shape[1], glen = gv.shape[0]
    out = np.zeros((rows, n_out))
    cdef double[:, ::1] xv = out
    cdef Py_ssize_t r, i, k, t, klo, khi
    cdef double acc
    with nogil:
        for r in range(rows):
            for i in range(n_out):
                # t = i + glen - 2 - 2k must lie in [0, glen)
                t = i + glen - 2
                khi = t // 2
                if khi > n - 1:
                    khi = n - 1
                klo = (t - glen + 2) // 2
                if t - glen + 1 < 0:
                    klo = 0
                elif klo < 0:
                    klo = 0
                acc = 0.0
                for k in range(klo, khi + 1):
                    acc += yv[r, k] * gv[t - 2 * k]
                xv[r, i] = acc
    return out
