# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense Cholesky kernels.

Mirrors ``_pykernels`` operation for operation; both backends must agree to
rounding.
"""
import numpy as np

from libc.math cimport sqrt, log
from libc.stdlib cimport malloc, free

from gaussdag.errors import NotPositiveDefinite


cdef int _factor(double* a, Py_ssize_t n, double rel_tol) nogil:
    """In-place lower Cholesky of a row-major n x n buffer.

    Returns the failing pivot index, or -1 on success.
    """
    cdef Py_ssize_t i, j, k
    cdef double s, d, dmax = 0.0
    for i in range(n):
        if a[i * n + i] > dmax:
            dmax = a[i * n + i]
    cdef double tol = rel_tol * dmax
    for j in range(n):
        s = a[j * n + j]
        for k in range(j):
            s -= a[j * n + k] * a[j * n + k]
        if not s > tol:
            return j
        d = sqrt(s)
        a[j * n + j] = d
        for i in range(j + 1, n):
            s = a[i * n + j]
            for k in range(j):
                s -= a[i * n + k] * a[j * n + k]
            a[i * n + j] = s / d
    return -1


def cholesky_lower(a, double rel_tol):
    cdef double[:, ::1] src = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n = src.shape[0]
    if src.shape[1] != n:
        raise ValueError("matrix must be square")
    out = np.array(src, dtype=np.float64, order="C")
    cdef double[:, ::1] buf = out
    cdef Py_ssize_t i, j
    cdef int bad
    if n == 0:
        return out
    with nogil:
        bad = _factor(&buf[0, 0], n, rel_tol)
    if bad >= 0:
        raise NotPositiveDefinite(f"non-positive pivot at index {bad}")
    for i in range(n):
        for j in range(i + 1, n):
            buf[i, j] = 0.0
    return out


def logdet_principal(a, idx, double rel_tol):
    """log det of a[idx][:, idx] without materializing a Python-level copy."""
    cdef double[:, ::1] src = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t[::1] ix = np.ascontiguousarray(idx, dtype=np.intp)
    cdef Py_ssize_t l = ix.shape[0], p, q, n = src.shape[0]
    cdef double* buf
    cdef double acc = 0.0
    cdef int bad
    for p in range(l):
        if ix[p] < 0 or ix[p] >= n:
            raise IndexError(f"index {ix[p]} out of range for dimension {n}")
    if l == 0:
        return 0.0
    buf = <double*> malloc(l * l * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for p in range(l):
                for q in range(l):
                    buf[p * l + q] = src[ix[p], ix[q]]
            bad = _factor(buf, l, rel_tol)
            if bad < 0:
                for p in range(l):
                    acc += log(buf[p * l + p])
        if bad >= 0:
            raise NotPositiveDefinite(f"non-positive pivot at index {bad}")
        return 2.0 * acc
    finally:
        free(buf)
