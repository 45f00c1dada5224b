import numpy as np
import pytest
from scipy import signal

from valence_pipe import ingest
from valence_pipe.synth import BASELINE_SPREAD_MS, InvalidSpec, SynthSpec, gen_cohort, gen_ppg, pulse
from valence_pipe.errors import SynthError


def test_constant_ibi_beat_count():
    session, truth = gen_ppg(SynthSpec(duration_s=30, mean_ibi_ms=1000))
    assert len(truth.beat_times_ms) == 30
    assert np.all(truth.nn_ms == 1000.0)
    assert len(session) == 750 and session.sample_rate_hz == 25.0


def test_same_seed_bit_identical():
    spec = SynthSpec(duration_s=40, mean_ibi_ms=800, sdnn_ms=40, resp_mod_depth_ms=30, noise_sd=0.1, seed=9)
    a, _ = gen_ppg(spec)
    b, _ = gen_ppg(spec)
    assert ingest.write_signal_csv(a) == ingest.write_signal_csv(b)
    c, _ = gen_ppg(SynthSpec(duration_s=40, mean_ibi_ms=800, sdnn_ms=40, noise_sd=0.1, seed=10))
    assert not np.array_equal(a.values, c.values)


def test_respiratory_modulation_peak():
    _, truth = gen_ppg(SynthSpec(duration_s=300, mean_ibi_ms=1000, sdnn_ms=25, resp_mod_depth_ms=30,
                                 resp_mod_hz=0.25, seed=2))
    t = truth.beat_times_ms[1:] / 1000
    grid = np.arange(t[0], t[-1], 0.25)
    y = np.interp(grid, t, truth.nn_ms)
    f, p = signal.periodogram(y - y.mean(), fs=4.0, nfft=8192)
    assert f[np.argmax(p)] == pytest.approx(0.25, abs=0.01)


def test_intervals_within_bounds():
    _, truth = gen_ppg(SynthSpec(duration_s=120, mean_ibi_ms=350, sdnn_ms=80, seed=1))
    assert truth.nn_ms.min() >= 300 and truth.nn_ms.max() <= 2000


@pytest.mark.parametrize("spec", [
    SynthSpec(mean_ibi_ms=250),
    SynthSpec(ibi_sequence_ms=[1000, 2500]),
    SynthSpec(noise_sd=-1),
    SynthSpec(sample_rate_hz=0),
])
def test_invalid_spec(spec):
    with pytest.raises(InvalidSpec):
        gen_ppg(spec)


def test_pulse_shape():
    dt = np.array([-100.0, -50.0, 0.0, 100.0, 200.0])
    assert pulse(dt).tolist() == pytest.approx([0.0, 0.5, 1.0, 0.5, 0.0])


def test_cohort_counts_and_determinism():
    a = gen_cohort(3, 4, 1.0, seed=5)
    b = gen_cohort(3, 4, 1.0, seed=5, workers=3)
    assert len(a.surveys) == 12 and len(a.sessions) == 12
    assert ingest.write_survey_csv(a.surveys) == ingest.write_survey_csv(b.surveys)
    assert all(x == y for x, y in zip(a.sessions, b.sessions))
    assert len({s.session_id for s in a.sessions}) == 12


def test_cohort_300_rows():
    cohort = gen_cohort(15, 20, 0.0, seed=7)
    assert len(cohort.surveys) == 300 and len(cohort.labels) == 300


def test_cohort_label_matches_affect():
    cohort = gen_cohort(4, 10, 2.0, seed=1)
    for s in cohort.surveys:
        pa = sum(s.item_scores[n] for n in ("active", "inspired", "attentive", "determined", "alert"))
        label = cohort.labels[(s.participant_id, s.timestamp_ms)]
        assert (pa >= 17) if label == 1 else (pa <= 14)


def test_effect_shifts_mean_ibi():
    cohort = gen_cohort(4, 10, 2.0, seed=1)
    by_sid = {s.session_id: s for s in cohort.surveys}
    gap = []
    for sid, truth in cohort.truths.items():
        s = by_sid[sid]
        gap.append((cohort.labels[(s.participant_id, s.timestamp_ms)], truth.nn_ms.mean()))
    high = max(m for l, m in gap if l == 1)
    low = min(m for l, m in gap if l == -1)
    assert high < low - BASELINE_SPREAD_MS / 2


def test_phone_only_exact_fraction():
    cohort = gen_cohort(5, 10, 1.0, seed=2, phone_only_fraction=0.4)
    assert sum(s.session_id is None for s in cohort.surveys) == 20
    assert len(cohort.sessions) == 30


def test_cohort_rejects_negative_effect():
    with pytest.raises(SynthError):
        gen_cohort(2, 2, -1.0, seed=0)
