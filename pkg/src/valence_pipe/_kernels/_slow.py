"""Pure-Python kernels; the fallback when the compiled module is unavailable.

Each function mirrors the signature and results of its counterpart in
``_fast.pyx`` exactly.
"""

import math

import numpy as np

_BETACF_MAX_ITER = 10000
_BETACF_EPS = 1e-16
_BETACF_TINY = 1e-300


def run_maxima(x, threshold):
    """Index of the maximum of every maximal run where ``x > threshold``.

    Ties inside a run resolve to the earliest index.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).tolist()
    threshold = np.ascontiguousarray(threshold, dtype=np.float64).tolist()
    out = []
    in_run = False
    best_i = 0
    best_v = 0.0
    for i, (v, t) in enumerate(zip(x, threshold)):
        if v > t:
            if not in_run or v > best_v:
                best_i, best_v = i, v
            in_run = True
        elif in_run:
            out.append(best_i)
            in_run = False
    if in_run:
        out.append(best_i)
    return np.array(out, dtype=np.int64)


def accept_intervals(raw, lo, hi, max_change):
    """Mask of intervals kept by the bounds and successive-change rules.

    An interval is kept when it lies in ``[lo, hi]`` and differs from the
    previously kept interval by at most ``max_change`` of that interval.
    """
    raw = np.ascontiguousarray(raw, dtype=np.float64).tolist()
    keep = np.zeros(len(raw), dtype=bool)
    prev = -1.0
    for i, v in enumerate(raw):
        if v < lo or v > hi:
            continue
        if prev > 0 and abs(v - prev) > max_change * prev:
            continue
        keep[i] = True
        prev = v
    return keep


def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_TINY:
        d = _BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            break
    return h


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if not (a > 0 and b > 0):
        raise ValueError("betainc requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b
