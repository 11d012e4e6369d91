# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled reduction kernels; see ``_numpy.py`` for the reference
semantics.  Per-subject accumulation runs in ascending sorted order so the
two lanes share the same permutation-invariance guarantees."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _insertion_sort(double* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, n):
        key = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > key:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = key


cdef double _sorted_sum(double* buf, Py_ssize_t n) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    _insertion_sort(buf, n)
    for i in range(n):
        acc += buf[i]
    return acc


def sq_dists_to_point(double[:, ::1] X, double[::1] point):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc, d
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                d = X[i, j] - point[j]
                acc += d * d
            o[i] = acc
    return out


def pairwise_sq_dists(double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    cdef double acc, d
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(m):
                    d = X[i, t] - X[j, t]
                    acc += d * d
                o[i, j] = acc
                o[j, i] = acc
    return out


def segment_sorted_sums(double[::1] values, long[::1] starts, long[::1] counts):
    cdef Py_ssize_t nseg = starts.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(nseg)
    cdef double[::1] o = out
    cdef Py_ssize_t j, s, c, i
    cdef cnp.ndarray[double, ndim=1] scratch_arr
    cdef double* scratch
    cdef Py_ssize_t cap = 0
    for j in range(nseg):
        if counts[j] > cap:
            cap = counts[j]
    scratch_arr = np.empty(max(cap, 1))
    scratch = &scratch_arr[0]
    with nogil:
        for j in range(nseg):
            s = starts[j]
            c = counts[j]
            for i in range(c):
                scratch[i] = values[s + i]
            o[j] = _sorted_sum(scratch, c)
    return out


def within_pair_sums(double[:, ::1] X, long[::1] starts, long[::1] counts):
    cdef Py_ssize_t nseg = starts.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(nseg)
    cdef double[::1] o = out
    cdef Py_ssize_t j, s, c, a, b, t, npairs, pos
    cdef double acc, d
    cdef cnp.ndarray[double, ndim=1] scratch_arr
    cdef double* scratch
    cdef Py_ssize_t cap = 0
    for j in range(nseg):
        c = counts[j]
        if c * (c - 1) // 2 > cap:
            cap = c * (c - 1) // 2
    scratch_arr = np.empty(max(cap, 1))
    scratch = &scratch_arr[0]
    with nogil:
        for j in range(nseg):
            s = starts[j]
            c = counts[j]
            if c < 2:
                o[j] = 0.0
                continue
            npairs = 0
            for a in range(c):
                for b in range(a + 1, c):
                    acc = 0.0
                    for t in range(m):
                        d = X[s + a, t] - X[s + b, t]
                        acc += d * d
                    scratch[npairs] = acc
                    npairs += 1
            o[j] = 2.0 * _sorted_sum(scratch, npairs)
    return out
