import numpy as np
import pytest

from valence_pipe import preprocess
from valence_pipe.model import EMOTIONS, SurveyResponse
from valence_pipe.synth import SynthSpec, gen_ppg


def make_survey(pid="P01", sid="S1", t=0, load=3, **scores):
    items = {name: 3 for name in EMOTIONS}
    items.update(scores)
    return SurveyResponse(pid, sid, t, items, load)


def filtered_signal(**spec_args):
    """Clean synthetic recording, bandpassed as one segment, plus its truth."""
    session, truth = gen_ppg(SynthSpec(**spec_args))
    segment = preprocess.PpgSegment(session.values, session.sample_rate_hz, int(session.timestamps_ms[0]))
    return preprocess.bandpass(segment), truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
