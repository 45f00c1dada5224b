import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from valence_pipe import preprocess
from valence_pipe.model import PpgSession
from valence_pipe.preprocess import AlreadyFiltered, EmptyWindow, InvalidBand, PpgSegment, WindowTooShort

FS = 25.0


def session(duration_s, start_ms=0):
    n = int(duration_s * FS)
    return PpgSession("S", "P", start_ms + np.arange(n) * 40, np.zeros(n))


def test_central_window_is_1500_samples():
    seg = preprocess.extract_window(session(200), 100_000)
    assert len(seg.values) == 1500 and seg.start_ms == 70_000
    assert not seg.filtered


def test_left_truncated_window():
    seg = preprocess.extract_window(session(200), 0)
    assert len(seg.values) == 750 and seg.start_ms == 0
    assert seg.duration_s == 30.0


def test_report_after_session_end():
    with pytest.raises(WindowTooShort):
        preprocess.extract_window(session(200), 210_000)


def test_report_far_away_is_empty():
    with pytest.raises(EmptyWindow):
        preprocess.extract_window(session(200), 1_000_000)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 300_000), st.floats(30, 60))
def test_window_timestamps_inside(report, half_width):
    s = session(300)
    try:
        seg = preprocess.extract_window(s, report, half_width)
    except (WindowTooShort, EmptyWindow):
        return
    t = seg.times_ms
    assert t[0] >= report - half_width * 1000 and t[-1] < report + half_width * 1000


def _segment(x):
    return PpgSegment(np.asarray(x, dtype=float), FS, 0)


def _central(y, margin_s=10):
    m = int(margin_s * FS)
    return y[m:-m]


def test_dc_removed():
    y = preprocess.bandpass(_segment(np.full(1500, 7.0)), 0.5, 4.0).values
    assert np.max(np.abs(_central(y))) < 1e-6 * 7.0


@pytest.mark.parametrize("high", [4.0, 6.0])
def test_in_band_sinusoid_passed(high):
    t = np.arange(1500) / FS
    y = preprocess.bandpass(_segment(np.sin(2 * np.pi * 1.2 * t)), 0.5, high).values
    assert np.max(np.abs(_central(y))) >= 0.9


@pytest.mark.parametrize("high", [4.0, 6.0])
def test_drift_attenuated(high):
    t = np.arange(1500) / FS
    y = preprocess.bandpass(_segment(np.sin(2 * np.pi * 0.05 * t)), 0.5, high).values
    assert np.max(np.abs(_central(y))) <= 0.1


def test_output_flags_and_length():
    seg = _segment(np.random.default_rng(0).normal(size=800))
    out = preprocess.bandpass(seg)
    assert out.filtered and len(out.values) == 800
    assert abs(out.values.mean()) < 0.05
    with pytest.raises(AlreadyFiltered):
        preprocess.bandpass(out)


@pytest.mark.parametrize("lo,hi,order", [(0, 4, 2), (4, 0.5, 2), (0.5, 12.5, 2), (0.5, 4, 0)])
def test_invalid_band(lo, hi, order):
    with pytest.raises(InvalidBand):
        preprocess.bandpass(_segment(np.zeros(100)), lo, hi, order)


def test_zero_phase():
    t = np.arange(1500) / FS
    x = np.sin(2 * np.pi * 1.3 * t)
    y = preprocess.bandpass(_segment(x)).values
    lag = np.arange(-5, 6)
    xc = [np.dot(_central(x), _central(np.roll(y, -k))) for k in lag]
    # sub-sample lag from a parabola through the correlation peak
    i = int(np.argmax(xc))
    a, b, c = xc[i - 1], xc[i], xc[i + 1]
    shift = lag[i] + 0.5 * (a - c) / (a - 2 * b + c)
    assert abs(shift) < 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**31))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 500))
    f = lambda v: preprocess.bandpass(_segment(v)).values
    lhs = f(a * x + b * y)
    rhs = a * f(x) + b * f(y)
    scale = max(np.max(np.abs(rhs)), 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale + 1e-12
