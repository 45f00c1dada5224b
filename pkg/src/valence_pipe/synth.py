"""Synthetic PPG sessions and survey cohorts with known ground truth.

Beat timing is the point of the generator; waveform realism is not. Every
random draw comes from one ``numpy.random.Generator`` seeded by the caller,
and cohort members use ``seed + index`` so they can be generated in any
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import SynthError
from .model import EMOTIONS, NEGATIVE_ITEMS, POSITIVE_ITEMS, PpgSession, SurveyResponse

IBI_BOUNDS_MS = (300.0, 2000.0)

# asymmetric raised-cosine pulse: fast systolic rise, slower decay
PULSE_RISE_MS = 100.0
PULSE_FALL_MS = 200.0

DRIFT_HZ = 0.05
ADC_OFFSET = 2048.0
ADC_GAIN = 200.0

STUDY_START_MS = 1_680_508_800_000  # 2023-04-03 08:00 UTC, a Monday


class InvalidSpec(SynthError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic recording.

    Either give ``ibi_sequence_ms`` explicitly or let the generator draw
    intervals around ``mean_ibi_ms`` with total spread ``sdnn_ms``, part of
    which is a sinusoidal respiratory modulation.
    """

    duration_s: float = 60.0
    ibi_sequence_ms: Optional[Sequence[float]] = None
    mean_ibi_ms: float = 1000.0
    sdnn_ms: float = 0.0
    resp_mod_hz: float = 0.25
    resp_mod_depth_ms: float = 0.0
    noise_sd: float = 0.0
    drift_amplitude: float = 0.3
    sample_rate_hz: float = 25.0
    start_ms: int = 0
    seed: int = 0
    session_id: str = "synth"
    participant_id: str = "synth"

    def violations(self) -> list[str]:
        out = []
        lo, hi = IBI_BOUNDS_MS
        if self.ibi_sequence_ms is not None:
            seq = np.asarray(self.ibi_sequence_ms, dtype=float)
            if seq.size == 0 or np.any((seq < lo) | (seq > hi)):
                out.append("ibi_sequence_ms values must lie in [300, 2000] ms")
        elif not lo <= self.mean_ibi_ms <= hi:
            out.append("mean_ibi_ms must lie in [300, 2000] ms")
        if self.noise_sd < 0:
            out.append("noise_sd must be >= 0")
        if self.sdnn_ms < 0 or self.resp_mod_depth_ms < 0:
            out.append("variability parameters must be >= 0")
        if not self.sample_rate_hz > 0 or not self.duration_s > 0:
            out.append("sample_rate_hz and duration_s must be positive")
        if self.start_ms < 0:
            out.append("start_ms must be >= 0")
        return out


@dataclass(frozen=True, eq=False)
class GroundTruth:
    beat_times_ms: np.ndarray
    nn_ms: np.ndarray

    def observed_nn(self, start_ms: float, end_ms: float) -> np.ndarray:
        """Intervals between beats whose peak lies a full upstroke inside ``[start, end]``."""
        t = self.beat_times_ms
        inside = np.flatnonzero((t - PULSE_RISE_MS >= start_ms) & (t + PULSE_RISE_MS <= end_ms))
        return np.diff(t[inside]) if inside.size > 1 else np.empty(0)


def draw_intervals(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Interval sequence long enough to cover ``spec.duration_s``."""
    if spec.ibi_sequence_ms is not None:
        return np.asarray(spec.ibi_sequence_ms, dtype=np.float64)
    total_ms = spec.duration_s * 1000.0
    n = int(math.ceil(total_ms / (0.5 * spec.mean_ibi_ms))) + 2
    depth = spec.resp_mod_depth_ms
    # AR(1) residual keeps successive changes well inside physiological jumps
    resid_sd = math.sqrt(max(spec.sdnn_ms**2 - depth**2 / 2.0, 0.0))
    phi = 0.5
    eps = rng.standard_normal(n)
    resid = np.empty(n)
    resid[0] = eps[0] * resid_sd
    for k in range(1, n):
        resid[k] = phi * resid[k - 1] + math.sqrt(1 - phi**2) * resid_sd * eps[k]
    phase = rng.uniform(0, 2 * math.pi)
    ibis = np.empty(n)
    t = 0.0
    for k in range(n):
        ibi = spec.mean_ibi_ms + depth * math.sin(2 * math.pi * spec.resp_mod_hz * t / 1000.0 + phase) + resid[k]
        ibis[k] = min(max(ibi, IBI_BOUNDS_MS[0]), IBI_BOUNDS_MS[1])
        t += ibis[k]
    return ibis


def pulse(dt_ms: np.ndarray) -> np.ndarray:
    """Unit-height pulse centred on its peak (``dt_ms = 0``)."""
    out = np.zeros_like(dt_ms)
    rise = (dt_ms > -PULSE_RISE_MS) & (dt_ms <= 0)
    fall = (dt_ms > 0) & (dt_ms < PULSE_FALL_MS)
    out[rise] = 0.5 * (1 + np.cos(np.pi * dt_ms[rise] / PULSE_RISE_MS))
    out[fall] = 0.5 * (1 + np.cos(np.pi * dt_ms[fall] / PULSE_FALL_MS))
    return out


def gen_ppg(spec: SynthSpec) -> tuple[PpgSession, GroundTruth]:
    problems = spec.violations()
    if problems:
        raise InvalidSpec("; ".join(problems))
    rng = np.random.default_rng(spec.seed)
    ibis = draw_intervals(spec, rng)
    total_ms = spec.duration_s * 1000.0
    beats = np.cumsum(ibis)
    beats = beats[beats <= total_ms]
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    step_ms = 1000.0 / spec.sample_rate_hz
    t_rel = np.arange(n) * step_ms
    wave = np.zeros(n)
    reach = max(PULSE_RISE_MS, PULSE_FALL_MS)
    for b in beats:
        lo = np.searchsorted(t_rel, b - reach)
        hi = np.searchsorted(t_rel, b + reach)
        wave[lo:hi] += pulse(t_rel[lo:hi] - b)
    drift_phase = rng.uniform(0, 2 * math.pi)
    wave += spec.drift_amplitude * np.sin(2 * math.pi * DRIFT_HZ * t_rel / 1000.0 + drift_phase)
    if spec.noise_sd > 0:
        wave += rng.normal(0.0, spec.noise_sd, n)
    timestamps = spec.start_ms + np.round(t_rel).astype(np.int64)
    values = np.round(ADC_OFFSET + ADC_GAIN * wave, 4)
    session = PpgSession(spec.session_id, spec.participant_id, timestamps, values, spec.sample_rate_hz)
    truth = GroundTruth(spec.start_ms + beats, np.diff(beats))
    return session, truth


# ---------------------------------------------------------------------------
# cohorts


@dataclass
class Cohort:
    sessions: list[PpgSession]
    surveys: list[SurveyResponse]
    labels: dict[tuple[str, int], int] = field(default_factory=dict)
    truths: dict[str, GroundTruth] = field(default_factory=dict)


BASE_IBI_MS = 850.0
BASELINE_SPREAD_MS = 100.0
SESSION_S = 80.0
REPORT_OFFSET_S = 40.0
NEGATIVE_ITEM_PROBS = (0.45, 0.3, 0.15, 0.07, 0.03)
COGNITIVE_LOAD_PROBS = (0.1, 0.25, 0.3, 0.25, 0.1)


def _spread_items(rng: np.random.Generator, total: int, k: int = 5) -> list[int]:
    """Random Likert scores for ``k`` items summing to ``total``."""
    scores = [1] * k
    for _ in range(total - k):
        open_slots = [i for i in range(k) if scores[i] < 5]
        scores[int(rng.choice(open_slots))] += 1
    rng.shuffle(scores)
    return [int(s) for s in scores]


def _response_times(rng: np.random.Generator, n: int) -> list[int]:
    """Distinct report times over two working weeks, 10:00-18:00 UTC."""
    days = [d for d in range(14) if d % 7 < 5]
    slots = set()
    while len(slots) < n:
        day = int(rng.choice(days))
        minute = int(rng.integers(2 * 60, 10 * 60))
        slots.add((day, minute))
    times = [STUDY_START_MS + day * 86_400_000 + minute * 60_000 for day, minute in slots]
    return sorted(times)


def gen_participant(index: int, n_responses: int, effect: float, seed: int, phone_only: Sequence[bool] = ()):
    """Sessions, surveys, labels and truths for one cohort member."""
    rng = np.random.default_rng(seed + index)
    pid = f"P{index + 1:02d}"
    center = rng.uniform(-BASELINE_SPREAD_MS / 4, BASELINE_SPREAD_MS / 4)
    resp_hz = rng.uniform(0.18, 0.32)
    sessions, surveys, labels, truths = [], [], {}, {}
    for r, t_report in enumerate(_response_times(rng, n_responses)):
        high = bool(rng.random() < 0.5)
        pa_total = int(rng.integers(17, 26)) if high else int(rng.integers(5, 15))
        positive = _spread_items(rng, pa_total)
        negative = [int(v) for v in rng.choice(np.arange(1, 6), size=5, p=NEGATIVE_ITEM_PROBS)]
        load = int(rng.choice(np.arange(1, 6), p=COGNITIVE_LOAD_PROBS))
        items = dict(zip(POSITIVE_ITEMS + NEGATIVE_ITEMS, positive + negative))

        mean_ibi = BASE_IBI_MS + center + rng.uniform(-BASELINE_SPREAD_MS / 4, BASELINE_SPREAD_MS / 4)
        if high:
            mean_ibi -= effect * BASELINE_SPREAD_MS
        mean_ibi = min(max(mean_ibi, 400.0), 1500.0)
        sid = f"{pid}-S{r + 1:03d}"
        no_signal = bool(phone_only[r]) if r < len(phone_only) else False
        if not no_signal:
            spec = SynthSpec(
                duration_s=SESSION_S,
                mean_ibi_ms=mean_ibi,
                sdnn_ms=0.05 * mean_ibi,
                resp_mod_hz=resp_hz,
                resp_mod_depth_ms=0.04 * mean_ibi,
                noise_sd=0.05,
                start_ms=t_report - int(REPORT_OFFSET_S * 1000),
                seed=int(rng.integers(2**31)),
                session_id=sid,
                participant_id=pid,
            )
            session, truth = gen_ppg(spec)
            sessions.append(session)
            truths[sid] = truth
        surveys.append(SurveyResponse(pid, None if no_signal else sid, t_report, items, load))
        labels[(pid, t_report)] = 1 if high else -1
    return sessions, surveys, labels, truths


def gen_cohort(
    n_participants: int,
    responses_per_participant: int,
    effect: float,
    seed: int,
    phone_only_fraction: float = 0.0,
    workers: int = 1,
) -> Cohort:
    """Generate a cohort whose high-valence responses have shorter mean IBI.

    Baseline mean IBIs lie in a band ``BASELINE_SPREAD_MS`` wide; high
    positive-affect responses are shifted down by ``effect`` times that width,
    so ``effect >= 1`` makes the classes separable and ``effect = 0`` makes
    the signal independent of the label. Exactly
    ``round(phone_only_fraction * total)`` responses carry no signal.
    """
    if effect < 0:
        raise SynthError("effect must be >= 0")
    if n_participants < 1 or responses_per_participant < 1:
        raise SynthError("need at least one participant and one response")
    if not 0 <= phone_only_fraction <= 1:
        raise SynthError("phone_only_fraction must lie in [0, 1]")
    total = n_participants * responses_per_participant
    n_phone = int(round(phone_only_fraction * total))
    picks = np.zeros(total, dtype=bool)
    picks[np.random.default_rng(seed).permutation(total)[:n_phone]] = True
    picks = picks.reshape(n_participants, responses_per_participant)

    def member(i):
        return gen_participant(i, responses_per_participant, effect, seed, picks[i])

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(member, range(n_participants)))
    else:
        parts = [member(i) for i in range(n_participants)]
    cohort = Cohort([], [])
    for sessions, surveys, labels, truths in parts:
        cohort.sessions.extend(sessions)
        cohort.surveys.extend(surveys)
        cohort.labels.update(labels)
        cohort.truths.update(truths)
    return cohort
