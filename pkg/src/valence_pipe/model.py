"""Core value types shared by every stage of the pipeline.

Signal-carrying types hold read-only numpy arrays rather than lists of
per-sample objects; ``PpgSession.samples`` still yields ``PpgSample`` values
for callers that want them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterator, Mapping, Optional

import numpy as np

POSITIVE_ITEMS = ("active", "inspired", "attentive", "determined", "alert")
NEGATIVE_ITEMS = ("hostile", "nervous", "upset", "afraid", "ashamed")
EMOTIONS = POSITIVE_ITEMS + NEGATIVE_ITEMS

FEATURE_NAMES = (
    "bpm",
    "ibi",
    "sdnn",
    "rmssd",
    "pnn20",
    "pnn50",
    "hr_mad",
    "sd1",
    "sd2",
    "s",
    "sd1_sd2",
    "breathing_rate",
)

LIKERT_MIN, LIKERT_MAX = 1, 5
NOMINAL_SAMPLE_RATE_HZ = 25.0


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PpgSample:
    timestamp_ms: int
    value: float


@dataclass(frozen=True, eq=False)
class PpgSession:
    """One participant-session of raw PPG-green readings."""

    session_id: str
    participant_id: str
    timestamps_ms: np.ndarray
    values: np.ndarray
    sample_rate_hz: float = NOMINAL_SAMPLE_RATE_HZ

    def __post_init__(self):
        object.__setattr__(self, "timestamps_ms", _frozen_array(self.timestamps_ms, np.int64))
        object.__setattr__(self, "values", _frozen_array(self.values, np.float64))
        if self.timestamps_ms.shape != self.values.shape or self.values.ndim != 1:
            raise ValueError("timestamps_ms and values must be 1-D arrays of equal length")

    @classmethod
    def from_samples(cls, session_id, participant_id, samples, sample_rate_hz=NOMINAL_SAMPLE_RATE_HZ):
        samples = list(samples)
        return cls(
            session_id,
            participant_id,
            [s.timestamp_ms for s in samples],
            [s.value for s in samples],
            sample_rate_hz,
        )

    @property
    def samples(self) -> Iterator[PpgSample]:
        for t, v in zip(self.timestamps_ms.tolist(), self.values.tolist()):
            yield PpgSample(t, v)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, PpgSession):
            return NotImplemented
        return (
            self.session_id == other.session_id
            and self.participant_id == other.participant_id
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.timestamps_ms, other.timestamps_ms)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class SurveyResponse:
    """A PANAS-10 self-report plus the cognitive-load rating."""

    participant_id: str
    session_id: Optional[str]
    timestamp_ms: int
    item_scores: Mapping[str, int]
    cognitive_load: int

    __hash__ = None

    def violations(self) -> list[str]:
        out = []
        missing = [name for name in EMOTIONS if name not in self.item_scores]
        if missing:
            out.append(f"missing items: {', '.join(missing)}")
        unknown = sorted(set(self.item_scores) - set(EMOTIONS))
        if unknown:
            out.append(f"unknown items: {', '.join(unknown)}")
        for name in EMOTIONS:
            score = self.item_scores.get(name)
            if score is not None and not LIKERT_MIN <= score <= LIKERT_MAX:
                out.append(f"{name} score {score} outside [1, 5]")
        if not LIKERT_MIN <= self.cognitive_load <= LIKERT_MAX:
            out.append(f"cognitive_load {self.cognitive_load} outside [1, 5]")
        return out


@dataclass(frozen=True)
class AffectScores:
    positive_affect: int
    negative_affect: int


@dataclass(frozen=True)
class HrvFeatures:
    """The twelve per-window HRV features.

    ``sd1_sd2`` and ``breathing_rate`` are ``None`` when undefined for the
    window (zero SD2, too short a span, or a flat respiratory spectrum).
    """

    bpm: float
    ibi: float
    sdnn: float
    rmssd: float
    pnn20: float
    pnn50: float
    hr_mad: float
    sd1: float
    sd2: float
    s: float
    sd1_sd2: Optional[float]
    breathing_rate: Optional[float]

    def as_dict(self) -> dict[str, Optional[float]]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def violations(self) -> list[str]:
        out = []
        if not math.isclose(self.bpm * self.ibi, 60000.0, rel_tol=1e-9):
            out.append("bpm * ibi != 60000")
        for name in ("sdnn", "rmssd", "hr_mad", "sd1", "sd2", "s"):
            if getattr(self, name) < 0:
                out.append(f"{name} negative")
        if not 0 <= self.pnn50 <= self.pnn20 <= 1:
            out.append("pnn ordering 0 <= pnn50 <= pnn20 <= 1 violated")
        if self.breathing_rate is not None and not 0.1 <= self.breathing_rate <= 0.4:
            out.append("breathing_rate outside [0.1, 0.4] Hz")
        return out


@dataclass(frozen=True, eq=False)
class NnSeries:
    """Detected beat times and the interbeat intervals between them (ms)."""

    peak_times_ms: np.ndarray
    intervals_ms: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "peak_times_ms", _frozen_array(self.peak_times_ms, np.float64))
        object.__setattr__(self, "intervals_ms", _frozen_array(self.intervals_ms, np.float64))

    @classmethod
    def from_peaks(cls, peak_times_ms) -> "NnSeries":
        peaks = np.asarray(peak_times_ms, dtype=np.float64)
        return cls(peaks, np.diff(peaks))

    @classmethod
    def from_intervals(cls, intervals_ms, start_ms: float = 0.0) -> "NnSeries":
        nn = np.asarray(intervals_ms, dtype=np.float64)
        return cls(start_ms + np.concatenate(([0.0], np.cumsum(nn))), nn)


@dataclass(frozen=True)
class AnalysisRow:
    """A survey response with its (possibly missing) HRV features."""

    survey: SurveyResponse
    features: Optional[HrvFeatures] = None
    missing_reason: Optional[str] = None

    __hash__ = None


@dataclass(frozen=True)
class LabeledSample:
    participant_id: str
    timestamp_ms: int
    features: HrvFeatures
    affect: AffectScores
    item_scores: Mapping[str, int]
    label: int

    __hash__ = None

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label!r}")


def validate_session(session: PpgSession) -> list[str]:
    """Return one message per violated session invariant; empty when valid."""
    problems = []
    if not session.session_id:
        problems.append("empty session_id")
    if not session.sample_rate_hz > 0:
        problems.append("non-positive sample_rate_hz")
    ts = session.timestamps_ms
    for i in np.flatnonzero(ts < 0):
        problems.append(f"negative timestamp at index {i}")
    for i in np.flatnonzero(np.diff(ts) <= 0) + 1:
        problems.append(f"non-increasing timestamp at index {i}")
    for i in np.flatnonzero(~np.isfinite(session.values)):
        problems.append(f"non-finite value at index {i}")
    return problems
