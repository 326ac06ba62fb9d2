# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a NumPy twin in ``_pycore`` with the same signature;
``_backend`` picks one at import. All kernels release the GIL so callers can
split work across threads; each kernel touches only its ``[start, stop)``
slice of the output, so chunked calls give the same result as one call.
"""
from libc.stdint cimport int64_t, uint8_t

import numpy as np


cdef inline Py_ssize_t _first_partner(const int64_t[:] conj, int64_t t, int64_t hi) noexcept nogil:
    # first index with t - conj[j] < hi
    cdef Py_ssize_t lo_i = 0, hi_i = conj.shape[0], mid
    while lo_i < hi_i:
        mid = (lo_i + hi_i) >> 1
        if t - conj[mid] >= hi:
            lo_i = mid + 1
        else:
            hi_i = mid
    return lo_i


def coincidence_all_pairs(const int64_t[:] probe, const int64_t[:] conj,
                          int64_t lo, int64_t hi, int64_t width,
                          int64_t[:] counts, Py_ssize_t start, Py_ssize_t stop):
    """Histogram every (probe, conjugate) pair with lo <= t_p - t_c < hi."""
    cdef Py_ssize_t n = conj.shape[0], i, j, j0
    cdef int64_t t, d
    if start >= stop or n == 0:
        return
    with nogil:
        j0 = _first_partner(conj, probe[start], hi)
        for i in range(start, stop):
            t = probe[i]
            while j0 < n and t - conj[j0] >= hi:
                j0 += 1
            j = j0
            while j < n:
                d = t - conj[j]
                if d < lo:
                    break
                counts[(d - lo) // width] += 1
                j += 1


def coincidence_start_stop(const int64_t[:] probe, const int64_t[:] conj,
                           int64_t lo, int64_t hi, int64_t width,
                           int64_t[:] counts, Py_ssize_t start, Py_ssize_t stop):
    """Count only the earliest conjugate inside the window of each probe."""
    cdef Py_ssize_t n = conj.shape[0], i, j0
    cdef int64_t t, d
    if start >= stop or n == 0:
        return
    with nogil:
        j0 = _first_partner(conj, probe[start], hi)
        for i in range(start, stop):
            t = probe[i]
            while j0 < n and t - conj[j0] >= hi:
                j0 += 1
            if j0 < n:
                d = t - conj[j0]
                if d >= lo:
                    counts[(d - lo) // width] += 1


def dead_time_mask(const int64_t[:] t, int64_t dead):
    """Non-paralyzable filter: keep an event iff >= dead after the last kept one."""
    cdef Py_ssize_t n = t.shape[0], i
    keep_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[:] keep = keep_arr
    cdef int64_t last
    if n == 0:
        return keep_arr
    with nogil:
        keep[0] = 1
        last = t[0]
        for i in range(1, n):
            if t[i] - last >= dead:
                keep[i] = 1
                last = t[i]
    return keep_arr


def bin_counts(const int64_t[:] t, int64_t width, Py_ssize_t nbins, int64_t[:] counts):
    cdef Py_ssize_t n = t.shape[0], i
    cdef int64_t b
    with nogil:
        for i in range(n):
            b = t[i] // width
            if b < nbins:
                counts[b] += 1


def pole_product_average(const double complex[:, :] a, const double[:, :] k,
                         const double[:] v, const double[:] w,
                         double complex[:] out, Py_ssize_t start, Py_ssize_t stop):
    """out[i] = sum_m w[m] / prod_p (a[i, p] - k[i, p] * v[m])."""
    cdef Py_ssize_t nv = v.shape[0], npole = a.shape[1], i, m, p
    cdef double complex acc, den
    with nogil:
        for i in range(start, stop):
            acc = 0
            for m in range(nv):
                den = 1
                for p in range(npole):
                    den = den * (a[i, p] - k[i, p] * v[m])
                acc = acc + w[m] / den
            out[i] = acc
