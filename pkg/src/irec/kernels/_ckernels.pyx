# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the scoring kernels (compiled backend).

Semantics match irec.kernels._pykernels; tests assert agreement at 1e-12
(the cosine reduction order differs from BLAS, so equality is not bitwise).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def bm25_accumulate(
    cnp.int32_t[::1] rows,
    double[::1] tfs,
    double idf,
    double k1,
    double[::1] len_norm,
    double[::1] scores,
):
    cdef Py_ssize_t i, n = rows.shape[0]
    cdef double tf
    for i in range(n):
        tf = tfs[i]
        scores[rows[i]] += idf * (tf * (k1 + 1.0)) / (tf + k1 * len_norm[rows[i]])


def cosine_scores(double[:, ::1] matrix, double[::1] query, double[::1] out):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += matrix[i, j] * query[j]
        out[i] = acc
