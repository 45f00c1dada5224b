import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from valence_pipe import _kernels
from valence_pipe._kernels import _slow

BACKENDS = [pytest.param(_slow, id="python")]
if _kernels.compiled() is not None:
    BACKENDS.append(pytest.param(_kernels.compiled(), id="cython"))


@pytest.fixture(params=BACKENDS)
def k(request):
    return request.param


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "python")


def test_run_maxima_basic(k):
    x = np.array([0, 2, 3, 2, 0, 0, 5, 5, 1, 0], dtype=float)
    assert k.run_maxima(x, np.full(10, 1.0)).tolist() == [2, 6]


def test_run_maxima_run_to_end(k):
    x = np.array([0, 1, 3, 4], dtype=float)
    assert k.run_maxima(x, np.zeros(4)).tolist() == [3]


def test_accept_intervals_rule(k):
    raw = np.array([1000, 1000, 600, 1000, 250, 2500, 1200], dtype=float)
    assert k.accept_intervals(raw, 300.0, 2000.0, 0.3).tolist() == [True, True, False, True, False, False, True]


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (1.0, 0.5, 0.999), (49.0, 0.5, 0.1), (3.5, 0.5, 0.9), (0.5, 0.5, 0.0), (2.0, 0.5, 1.0)])
def test_betainc_matches_reference(k, a, b, x):
    assert k.betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 500), st.floats(0.0, 1.0))
def test_betainc_property(a, x):
    assert _kernels.betainc(a, 0.5, x) == pytest.approx(special.betainc(a, 0.5, x), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60), st.floats(-3, 3))
def test_backends_agree_run_maxima(values, level):
    x = np.array(values)
    thr = np.full(len(x), level)
    ref = _slow.run_maxima(x, thr)
    fast = _kernels.run_maxima(x, thr)
    assert ref.tolist() == fast.tolist()
    # each reported index is above threshold and the maximum of its run
    for i in ref:
        assert x[i] > level


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(100, 2500), min_size=1, max_size=60))
def test_backends_agree_accept(values):
    raw = np.array(values)
    assert _slow.accept_intervals(raw, 300.0, 2000.0, 0.3).tolist() == _kernels.accept_intervals(raw, 300.0, 2000.0, 0.3).tolist()
