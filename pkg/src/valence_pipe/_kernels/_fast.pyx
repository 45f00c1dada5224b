# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Results match ``_slow`` exactly."""

import numpy as np

from libc.math cimport exp, fabs, lgamma, log, log1p

cdef int BETACF_MAX_ITER = 10000
cdef double BETACF_EPS = 1e-16
cdef double BETACF_TINY = 1e-300


def run_maxima(x, threshold):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    if tv.shape[0] != n:
        raise ValueError("x and threshold differ in length")
    out = np.empty(n // 2 + 1, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef Py_ssize_t i, k = 0, best_i = 0
    cdef double best_v = 0.0, v
    cdef bint in_run = False
    for i in range(n):
        v = xv[i]
        if v > tv[i]:
            if not in_run or v > best_v:
                best_i = i
                best_v = v
            in_run = True
        elif in_run:
            ov[k] = best_i
            k += 1
            in_run = False
    if in_run:
        ov[k] = best_i
        k += 1
    return out[:k].copy()


def accept_intervals(raw, double lo, double hi, double max_change):
    cdef const double[::1] rv = np.ascontiguousarray(raw, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0]
    keep = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] kv = keep
    cdef Py_ssize_t i
    cdef double prev = -1.0, v
    for i in range(n):
        v = rv[i]
        if v < lo or v > hi:
            continue
        if prev > 0 and fabs(v - prev) > max_change * prev:
            continue
        kv[i] = 1
        prev = v
    return keep.astype(bool)


cdef double _betacf(double a, double b, double x) nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d, h, aa, delta
    cdef int m, m2
    d = 1.0 - qab * x / qap
    if fabs(d) < BETACF_TINY:
        d = BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < BETACF_TINY:
            d = BETACF_TINY
        c = 1.0 + aa / c
        if fabs(c) < BETACF_TINY:
            c = BETACF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < BETACF_TINY:
            d = BETACF_TINY
        c = 1.0 + aa / c
        if fabs(c) < BETACF_TINY:
            c = BETACF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < BETACF_EPS:
            break
    return h


def betainc(double a, double b, double x):
    if not (a > 0 and b > 0):
        raise ValueError("betainc requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    cdef double front = exp(lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b
