# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: configuration counting and result indicators.

Configuration index convention: condition 0 is the most significant bit.
"""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t

cnp.import_array()

cdef double TOL = 1e-12


cdef inline bint _passes(int64_t cases, int64_t hits, double consistency,
                         int64_t conf_n) noexcept nogil:
    return cases >= conf_n and cases > 0 and hits >= consistency * cases - TOL


cdef void _count_bits(const uint8_t[:, ::1] conditions, const uint8_t[::1] outcome,
                      int64_t[::1] counts, int64_t[::1] hits) noexcept nogil:
    cdef Py_ssize_t n = conditions.shape[0], v = conditions.shape[1]
    cdef Py_ssize_t i, j
    cdef int64_t idx
    for i in range(counts.shape[0]):
        counts[i] = 0
        hits[i] = 0
    for i in range(n):
        idx = 0
        for j in range(v):
            idx = (idx << 1) | conditions[i, j]
        counts[idx] += 1
        hits[idx] += outcome[i]


cdef void _count_uniforms(const double[:, ::1] draws, const double[::1] probs,
                          int64_t[::1] counts, int64_t[::1] hits) noexcept nogil:
    # draws has v + 1 columns; the last one is the outcome
    cdef Py_ssize_t n = draws.shape[0], v = draws.shape[1] - 1
    cdef Py_ssize_t i, j
    cdef int64_t idx
    for i in range(counts.shape[0]):
        counts[i] = 0
        hits[i] = 0
    for i in range(n):
        idx = 0
        for j in range(v):
            idx = (idx << 1) | (draws[i, j] < probs[j])
        counts[idx] += 1
        if draws[i, v] < probs[v]:
            hits[idx] += 1


cdef bint _indicator(const int64_t[::1] counts, const int64_t[::1] hits,
                     double consistency, int64_t conf_n, bint complex_mode) noexcept nogil:
    cdef Py_ssize_t r
    cdef bint any_pass = False, any_forbidden = False
    for r in range(counts.shape[0]):
        if _passes(counts[r], hits[r], consistency, conf_n):
            any_pass = True
        elif complex_mode or counts[r] > 0:
            any_forbidden = True
        if any_pass and any_forbidden:
            return True
    return False


def config_counts(const uint8_t[:, ::1] conditions, const uint8_t[::1] outcome):
    cdef Py_ssize_t v = conditions.shape[1]
    counts = np.zeros(1 << v, dtype=np.int64)
    hits = np.zeros(1 << v, dtype=np.int64)
    cdef int64_t[::1] c = counts
    cdef int64_t[::1] h = hits
    with nogil:
        _count_bits(conditions, outcome, c, h)
    return counts, hits


def uniform_counts(const double[:, ::1] draws, const double[::1] probs):
    cdef Py_ssize_t v = draws.shape[1] - 1
    counts = np.zeros(1 << v, dtype=np.int64)
    hits = np.zeros(1 << v, dtype=np.int64)
    cdef int64_t[::1] c = counts
    cdef int64_t[::1] h = hits
    with nogil:
        _count_uniforms(draws, probs, c, h)
    return counts, hits


def result_indicator(const int64_t[::1] counts, const int64_t[::1] hits,
                     double consistency, int64_t conf_n, bint complex_mode):
    cdef bint out
    with nogil:
        out = _indicator(counts, hits, consistency, conf_n, complex_mode)
    return bool(out)


def uniform_indicator(const double[:, ::1] draws, const double[::1] probs,
                      double consistency, int64_t conf_n, bint complex_mode):
    cdef Py_ssize_t v = draws.shape[1] - 1
    cdef int64_t[::1] c = np.empty(1 << v, dtype=np.int64)
    cdef int64_t[::1] h = np.empty(1 << v, dtype=np.int64)
    cdef bint out
    with nogil:
        _count_uniforms(draws, probs, c, h)
        out = _indicator(c, h, consistency, conf_n, complex_mode)
    return bool(out)


def grid_indicators(const int64_t[::1] counts, const int64_t[::1] hits,
                    const double[::1] consistencies, const int64_t[::1] conf_ns,
                    bint complex_mode):
    out = np.zeros((consistencies.shape[0], conf_ns.shape[0]), dtype=np.uint8)
    cdef uint8_t[:, ::1] o = out
    cdef Py_ssize_t a, b
    with nogil:
        for a in range(consistencies.shape[0]):
            for b in range(conf_ns.shape[0]):
                o[a, b] = _indicator(counts, hits, consistencies[a], conf_ns[b],
                                     complex_mode)
    return out
