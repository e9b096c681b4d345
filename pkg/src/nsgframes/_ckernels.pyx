# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; see ``_kernels_py`` for the contracts."""

cimport cython


def gather(const double[::1] f, const long long[::1] positions, const double[::1] taps,
           const long long[::1] offsets, double[::1] out):
    cdef Py_ssize_t T = f.shape[0]
    cdef Py_ssize_t K = positions.shape[0]
    cdef Py_ssize_t k, j, start, stop, src
    for k in range(K):
        start = offsets[k]
        stop = offsets[k + 1]
        src = positions[k] % T
        if src < 0:
            src += T
        for j in range(start, stop):
            out[j] = f[src] * taps[j]
            src += 1
            if src == T:
                src = 0


def overlap_add(const double[::1] y, const long long[::1] positions, const double[::1] taps,
                const long long[::1] offsets, double[::1] out):
    cdef Py_ssize_t T = out.shape[0]
    cdef Py_ssize_t K = positions.shape[0]
    cdef Py_ssize_t k, j, start, stop, dst
    for k in range(K):
        start = offsets[k]
        stop = offsets[k + 1]
        dst = positions[k] % T
        if dst < 0:
            dst += T
        for j in range(start, stop):
            out[dst] += taps[j] * y[j]
            dst += 1
            if dst == T:
                dst = 0


def accumulate_diagonal(const long long[::1] positions, const double[::1] taps,
                        const long long[::1] offsets, const long long[::1] channels,
                        double[::1] out):
    cdef Py_ssize_t T = out.shape[0]
    cdef Py_ssize_t K = positions.shape[0]
    cdef Py_ssize_t k, j, start, stop, dst
    cdef double m
    for k in range(K):
        start = offsets[k]
        stop = offsets[k + 1]
        m = <double>channels[k]
        dst = positions[k] % T
        if dst < 0:
            dst += T
        for j in range(start, stop):
            out[dst] += (m * taps[j]) * taps[j]
            dst += 1
            if dst == T:
                dst = 0
