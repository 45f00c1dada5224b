"""Windowing around a self-report and zero-phase bandpass filtering."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .errors import PreprocessError
from .model import PpgSession

DEFAULT_HALF_WIDTH_S = 30.0
DEFAULT_BAND_HZ = (0.5, 6.0)
DEFAULT_ORDER = 2


class WindowTooShort(PreprocessError):
    def __init__(self, actual_duration_s: float, required_s: float):
        super().__init__(f"window holds {actual_duration_s:.3f} s of signal, need {required_s:.3f} s")
        self.actual_duration_s = actual_duration_s


class EmptyWindow(PreprocessError):
    pass


class InvalidBand(PreprocessError):
    pass


class AlreadyFiltered(PreprocessError):
    pass


@dataclass(frozen=True, eq=False)
class PpgSegment:
    values: np.ndarray
    sample_rate_hz: float
    start_ms: int
    filtered: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("a segment needs at least two samples")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def duration_s(self) -> float:
        return len(self.values) / self.sample_rate_hz

    @property
    def times_ms(self) -> np.ndarray:
        return self.start_ms + np.arange(len(self.values)) * (1000.0 / self.sample_rate_hz)


def extract_window(session: PpgSession, report_time_ms: int, half_width_s: float = DEFAULT_HALF_WIDTH_S) -> PpgSegment:
    """Samples with timestamps in ``[report - half_width, report + half_width)``.

    Windows clipped by the session edges are kept as long as they still hold
    ``half_width_s`` seconds of samples.
    """
    half_ms = half_width_s * 1000.0
    ts = session.timestamps_ms
    lo = np.searchsorted(ts, report_time_ms - half_ms, side="left")
    hi = np.searchsorted(ts, report_time_ms + half_ms, side="left")
    n = hi - lo
    if n == 0:
        raise EmptyWindow(f"no samples within {half_width_s} s of {report_time_ms}")
    duration = n / session.sample_rate_hz
    if duration < half_width_s or n < 2:
        raise WindowTooShort(duration, half_width_s)
    return PpgSegment(session.values[lo:hi], session.sample_rate_hz, int(ts[lo]))


def design_bandpass(sample_rate_hz: float, low_hz: float, high_hz: float, order: int) -> np.ndarray:
    if not 0 < low_hz < high_hz < sample_rate_hz / 2:
        raise InvalidBand(f"need 0 < {low_hz} < {high_hz} < {sample_rate_hz / 2}")
    if order < 1:
        raise InvalidBand(f"filter order must be >= 1, got {order}")
    return signal.butter(order, [low_hz, high_hz], btype="bandpass", fs=sample_rate_hz, output="sos")


def bandpass(
    segment: PpgSegment,
    low_hz: float = DEFAULT_BAND_HZ[0],
    high_hz: float = DEFAULT_BAND_HZ[1],
    order: int = DEFAULT_ORDER,
) -> PpgSegment:
    """Forward-backward Butterworth bandpass with reflected edges."""
    if segment.filtered:
        raise AlreadyFiltered("segment was already bandpass filtered")
    sos = design_bandpass(segment.sample_rate_hz, low_hz, high_hz, order)
    padlen = min(3 * order, len(segment.values) - 1)
    y = signal.sosfiltfilt(sos, segment.values, padtype="even", padlen=padlen)
    return replace(segment, values=y, filtered=True)
