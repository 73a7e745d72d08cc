# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of numpy_backend.

Loops mirror the element order of the numpy calls they replace (np.add.at
accumulates in index order) and the exponential goes through np.exp, so
both backends produce bitwise-identical float64 results.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

NAME = "compiled"


def gather_rows(double[:, ::1] table, cnp.int64_t[::1] idx):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t d = table.shape[1]
    res = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef Py_ssize_t i, j, r
    for i in range(n):
        r = idx[i]
        for j in range(d):
            out[i, j] = table[r, j]
    return res


def scatter_add_rows(double[:, ::1] acc, cnp.int64_t[::1] idx, double[:, ::1] rows):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t d = acc.shape[1]
    cdef Py_ssize_t i, j, r
    for i in range(n):
        r = idx[i]
        for j in range(d):
            acc[r, j] += rows[i, j]
    return np.asarray(acc)


def triple_concat(
    double[:, ::1] ent,
    double[:, ::1] rel,
    cnp.int64_t[::1] heads,
    cnp.int64_t[::1] rels,
    cnp.int64_t[::1] tails,
):
    cdef Py_ssize_t n = heads.shape[0]
    cdef Py_ssize_t d = ent.shape[1]
    cdef Py_ssize_t dr = rel.shape[1]
    res = np.empty((n, 2 * d + dr), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            out[i, j] = ent[heads[i], j]
        for j in range(dr):
            out[i, d + j] = rel[rels[i], j]
        for j in range(d):
            out[i, d + dr + j] = ent[tails[i], j]
    return res


def triple_concat_backward(
    double[:, ::1] grad,
    cnp.int64_t[::1] heads,
    cnp.int64_t[::1] rels,
    cnp.int64_t[::1] tails,
    double[:, ::1] d_ent,
    double[:, ::1] d_rel,
):
    cdef Py_ssize_t n = heads.shape[0]
    cdef Py_ssize_t d = d_ent.shape[1]
    cdef Py_ssize_t dr = d_rel.shape[1]
    cdef Py_ssize_t i, j
    # Three separate passes keep the accumulation order of the numpy twin.
    for i in range(n):
        for j in range(d):
            d_ent[heads[i], j] += grad[i, j]
    for i in range(n):
        for j in range(dr):
            d_rel[rels[i], j] += grad[i, d + j]
    for i in range(n):
        for j in range(d):
            d_ent[tails[i], j] += grad[i, d + dr + j]


def leaky_forward(x, double slope):
    # np.ascontiguousarray promotes 0-d to 1-d, so keep the original shape.
    arr = np.asarray(x, dtype=np.float64)
    res = np.empty(arr.shape, dtype=np.float64)
    cdef double[::1] xf = np.ascontiguousarray(arr.reshape(-1))
    cdef double[::1] of = res.reshape(-1)
    cdef Py_ssize_t i
    for i in range(xf.shape[0]):
        of[i] = xf[i] if xf[i] > 0.0 else slope * xf[i]
    return res


def leaky_backward(x, grad, double slope):
    arr = np.asarray(x, dtype=np.float64)
    res = np.empty(arr.shape, dtype=np.float64)
    cdef double[::1] xf = np.ascontiguousarray(arr.reshape(-1))
    cdef double[::1] gf = np.ascontiguousarray(np.asarray(grad, dtype=np.float64).reshape(-1))
    cdef double[::1] of = res.reshape(-1)
    cdef Py_ssize_t i
    for i in range(xf.shape[0]):
        of[i] = gf[i] if xf[i] > 0.0 else slope * gf[i]
    return res


def segment_softmax(double[::1] scores, cnp.int64_t[::1] seg, Py_ssize_t n_seg):
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i
    high_arr = np.full(n_seg, -INFINITY, dtype=np.float64)
    cdef double[::1] high = high_arr
    for i in range(n):
        if scores[i] > high[seg[i]]:
            high[seg[i]] = scores[i]
    shifted = np.empty(n, dtype=np.float64)
    cdef double[::1] sh = shifted
    for i in range(n):
        sh[i] = scores[i] - high[seg[i]]
    ex_arr = np.exp(shifted)
    cdef double[::1] ex = ex_arr
    denom_arr = np.zeros(n_seg, dtype=np.float64)
    cdef double[::1] denom = denom_arr
    for i in range(n):
        denom[seg[i]] += ex[i]
    res = np.empty(n, dtype=np.float64)
    cdef double[::1] out = res
    for i in range(n):
        out[i] = ex[i] / denom[seg[i]]
    return res


def segment_softmax_backward(double[::1] probs, double[::1] grad, cnp.int64_t[::1] seg, Py_ssize_t n_seg):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t i
    inner_arr = np.zeros(n_seg, dtype=np.float64)
    cdef double[::1] inner = inner_arr
    for i in range(n):
        inner[seg[i]] += probs[i] * grad[i]
    res = np.empty(n, dtype=np.float64)
    cdef double[::1] out = res
    for i in range(n):
        out[i] = probs[i] * (grad[i] - inner[seg[i]])
    return res


def segment_sum(double[:, ::1] rows, cnp.int64_t[::1] seg, Py_ssize_t n_seg):
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t d = rows.shape[1]
    res = np.zeros((n_seg, d), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            out[seg[i], j] += rows[i, j]
    return res


def segment_expand(double[:, ::1] values, cnp.int64_t[::1] seg):
    cdef Py_ssize_t n = seg.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    res = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            out[i, j] = values[seg[i], j]
    return res


def scale_rows(double[:, ::1] rows, double[::1] coeff):
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t d = rows.shape[1]
    res = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            out[i, j] = rows[i, j] * coeff[i]
    return res


def rows_dot(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    res = np.empty(n, dtype=np.float64)
    cdef double[::1] out = res
    cdef Py_ssize_t i, j
    cdef double total
    for i in range(n):
        total = 0.0
        for j in range(d):
            total = total + a[i, j] * b[i, j]
        out[i] = total
    return res
