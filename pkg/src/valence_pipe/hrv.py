"""Beat detection, NN-interval cleaning and the twelve HRV features."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import interpolate, ndimage, signal

from . import _kernels
from .errors import HrvError
from .model import HrvFeatures, NnSeries
from .preprocess import PpgSegment

MOVING_AVERAGE_S = 0.75
ELEVATIONS = (0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.60, 1.0)
BPM_RANGE = (40.0, 180.0)

NN_BOUNDS_MS = (300.0, 2000.0)
MAX_SUCCESSIVE_CHANGE = 0.30
MIN_INTERVALS = 10
MIN_ACCEPTED_FRACTION = 0.5

RESAMPLE_HZ = 4.0
BREATHING_BAND_HZ = (0.1, 0.4)
MIN_BREATHING_SPAN_MS = 20_000.0
MIN_BREATHING_POWER = 1e-12
BREATHING_NFFT = 4096


class NoPlausiblePeaks(HrvError):
    stage = "peak_detection"


class TooFewIntervals(HrvError):
    stage = "interval_cleaning"


class SpanTooShort(HrvError):
    stage = "breathing_rate"


class NotFiltered(HrvError):
    stage = "peak_detection"


def _refine(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Sub-sample peak positions from the cubic-spline extremum near each index."""
    spline = interpolate.CubicSpline(np.arange(len(x), dtype=np.float64), x)
    extrema = spline.derivative().roots(extrapolate=False)
    extrema = extrema[np.isfinite(extrema)]
    pos = idx.astype(np.float64)
    if extrema.size == 0:
        return pos
    extrema.sort()
    # the maxima nearest each index: left and right neighbours in sorted roots
    right = np.clip(np.searchsorted(extrema, pos), 0, extrema.size - 1)
    left = np.clip(right - 1, 0, extrema.size - 1)
    for k, (a, b) in enumerate(zip(extrema[left], extrema[right])):
        near = [c for c in (a, b) if abs(c - pos[k]) < 1.0]
        if near:
            pos[k] = max(near, key=lambda c: spline(c))
    return pos


def detect_peaks(segment: PpgSegment) -> NnSeries:
    """Adaptive-threshold beat detection on a filtered segment.

    The threshold is a 0.75 s moving average raised by a fraction of the
    segment's peak-to-peak amplitude. Every elevation in ``ELEVATIONS`` is
    tried; among those whose peak count implies a heart rate inside
    ``BPM_RANGE`` the one with the most regular intervals wins.
    """
    if not segment.filtered:
        raise NotFiltered("peak detection expects a bandpass-filtered segment")
    x = segment.values
    fs = segment.sample_rate_hz
    window = max(1, int(round(MOVING_AVERAGE_S * fs)))
    baseline = ndimage.uniform_filter1d(x, window, mode="nearest")
    amplitude = float(np.ptp(x))
    if not amplitude > 0:
        raise NoPlausiblePeaks("segment is flat")

    best: Optional[tuple[float, np.ndarray]] = None
    for elevation in ELEVATIONS:
        idx = _kernels.run_maxima(x, baseline + elevation * amplitude)
        # a run maximum sitting on the segment edge is not a located peak
        idx = idx[(idx > 0) & (idx < len(x) - 1)]
        if len(idx) < 2:
            continue
        bpm = 60.0 * len(idx) / segment.duration_s
        if not BPM_RANGE[0] <= bpm <= BPM_RANGE[1]:
            continue
        spread = float(np.std(np.diff(idx)))
        if best is None or spread < best[0]:
            best = (spread, idx)
    if best is None:
        raise NoPlausiblePeaks(f"no elevation yields a heart rate within {BPM_RANGE} bpm")
    peak_times = segment.start_ms + _refine(x, best[1]) * (1000.0 / fs)
    return NnSeries.from_peaks(peak_times)


def nn_intervals(
    peaks: NnSeries,
    min_intervals: int = MIN_INTERVALS,
    min_accepted_fraction: float = MIN_ACCEPTED_FRACTION,
) -> NnSeries:
    """Drop implausible intervals: outside 300-2000 ms or a >30% jump.

    Too few survivors, in absolute terms or as a share of the raw intervals,
    means the segment's beat train is unreliable and ``TooFewIntervals`` is
    raised.
    """
    if len(peaks.peak_times_ms) < 2:
        raise TooFewIntervals("need at least two peaks")
    raw = np.diff(peaks.peak_times_ms)
    keep = _kernels.accept_intervals(raw, NN_BOUNDS_MS[0], NN_BOUNDS_MS[1], MAX_SUCCESSIVE_CHANGE)
    accepted = raw[keep]
    if len(accepted) < min_intervals or len(accepted) < min_accepted_fraction * len(raw):
        raise TooFewIntervals(f"{len(accepted)} of {len(raw)} intervals accepted, need {min_intervals}")
    return NnSeries(peaks.peak_times_ms, accepted)


def _intervals(nn) -> np.ndarray:
    values = nn.intervals_ms if isinstance(nn, NnSeries) else nn
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        raise TooFewIntervals("feature computation needs at least two intervals")
    return values


def time_domain_features(nn) -> dict[str, float]:
    """bpm, ibi, sdnn, rmssd, pnn20, pnn50 and hr_mad of an NN series.

    Standard deviations are population (ddof=0) values; pNN thresholds are
    strict.
    """
    x = _intervals(nn)
    ibi = float(x.mean())
    diffs = np.diff(x)
    abs_diffs = np.abs(diffs)
    median = np.median(x)
    return {
        "bpm": 60000.0 / ibi,
        "ibi": ibi,
        "sdnn": float(x.std()),
        "rmssd": float(np.sqrt(np.mean(diffs**2))),
        "pnn20": float(np.mean(abs_diffs > 20.0)),
        "pnn50": float(np.mean(abs_diffs > 50.0)),
        "hr_mad": float(np.median(np.abs(x - median))),
    }


def poincare_features(nn) -> dict[str, Optional[float]]:
    x = _intervals(nn)
    # shifting leaves both spreads unchanged and makes a constant series exactly zero
    x = x - x[0]
    a, b = x[:-1], x[1:]
    sd1 = float(np.std((b - a) / math.sqrt(2)))
    sd2 = float(np.std((b + a) / math.sqrt(2)))
    return {
        "sd1": sd1,
        "sd2": sd2,
        "s": math.pi * sd1 * sd2,
        "sd1_sd2": sd1 / sd2 if sd2 > 0 else None,
    }


def breathing_rate(nn) -> Optional[float]:
    """Dominant respiratory frequency (Hz) of the NN tachogram.

    The series is placed at cumulative beat times, cubic-interpolated onto a
    4 Hz grid, demeaned, and the periodogram peak inside 0.1-0.4 Hz is
    returned. ``None`` means the band holds no measurable power.
    """
    x = _intervals(nn)
    t = np.cumsum(x)
    if t[-1] - t[0] < MIN_BREATHING_SPAN_MS or len(x) < MIN_INTERVALS:
        raise SpanTooShort(f"tachogram spans {(t[-1] - t[0]) / 1000:.1f} s, need 20 s and 10 intervals")
    grid = np.arange(t[0], t[-1], 1000.0 / RESAMPLE_HZ)
    resampled = interpolate.interp1d(t, x, kind="cubic")(grid)
    resampled -= resampled.mean()
    nfft = max(BREATHING_NFFT, len(resampled))
    freqs, power = signal.periodogram(resampled, fs=RESAMPLE_HZ, nfft=nfft, detrend=False)
    band = (freqs >= BREATHING_BAND_HZ[0]) & (freqs <= BREATHING_BAND_HZ[1])
    if not band.any():
        return None
    k = int(np.argmax(power[band]))
    if power[band][k] < MIN_BREATHING_POWER:
        return None
    return float(freqs[band][k])


def features_from_nn(nn: NnSeries) -> HrvFeatures:
    values = time_domain_features(nn)
    values.update(poincare_features(nn))
    try:
        values["breathing_rate"] = breathing_rate(nn)
    except SpanTooShort:
        values["breathing_rate"] = None
    return HrvFeatures(**values)


def compute_features(segment: PpgSegment) -> HrvFeatures:
    """Full chain from a filtered segment to its HRV features.

    Raises the failing stage's ``HrvError``; its ``stage`` attribute names
    where extraction stopped.
    """
    peaks = detect_peaks(segment)
    return features_from_nn(nn_intervals(peaks))
