# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR x dense kernels.

Rows are processed in order and each output row accumulates its nonzeros in
stored order, so results are bitwise reproducible for a fixed input.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def csr_spmm(const cnp.int64_t[::1] indptr,
             const cnp.int64_t[::1] indices,
             const double[::1] data,
             const double[:, ::1] x):
    """Return ``A @ x`` for ``A`` given in CSR arrays."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t m = x.shape[1]
    out = np.zeros((n_rows, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, p, c
    cdef double v
    with nogil:
        for i in range(n_rows):
            for p in range(indptr[i], indptr[i + 1]):
                c = indices[p]
                v = data[p]
                for j in range(m):
                    o[i, j] += v * x[c, j]
    return out


def csr_spmm_add(const cnp.int64_t[::1] indptr,
                 const cnp.int64_t[::1] indices,
                 const double[::1] data,
                 const double[:, ::1] x,
                 const double[:, ::1] b,
                 double beta):
    """Return ``b + beta * (A @ x)`` in one pass."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t m = x.shape[1]
    out = np.empty((n_rows, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] acc = np.empty(m, dtype=np.float64)
    cdef Py_ssize_t i, j, p, c
    cdef double v
    with nogil:
        for i in range(n_rows):
            for j in range(m):
                acc[j] = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                c = indices[p]
                v = data[p]
                for j in range(m):
                    acc[j] += v * x[c, j]
            for j in range(m):
                o[i, j] = b[i, j] + beta * acc[j]
    return out
