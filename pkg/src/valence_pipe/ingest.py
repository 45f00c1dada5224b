"""CSV file formats and the survey-to-signal join.

Signal files::

    # session_id=P01-S001
    # participant_id=P01
    # sample_rate_hz=25.0
    timestamp_ms,ppg_green
    1680509000000,2048.0

Leading ``# key=value`` lines are metadata. ``session_id`` and
``participant_id`` are required; ``sample_rate_hz`` is optional and otherwise
inferred from the median sample spacing. Other keys (e.g. ``config_hash``)
are returned by :func:`read_comments` and ignored by the parsers. Writers
emit floats with ``repr`` so parse/write round-trips are exact.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import IngestError
from .model import (
    EMOTIONS,
    FEATURE_NAMES,
    LIKERT_MAX,
    LIKERT_MIN,
    NOMINAL_SAMPLE_RATE_HZ,
    AnalysisRow,
    HrvFeatures,
    PpgSession,
    SurveyResponse,
)

SIGNAL_HEADER = ("timestamp_ms", "ppg_green")
SURVEY_HEADER = ("participant_id", "session_id", "timestamp_ms") + EMOTIONS + ("cognitive_load",)
FEATURE_HEADER = ("participant_id", "session_id", "timestamp_ms") + FEATURE_NAMES + ("missing_reason",)

Content = Union[bytes, str]


class MalformedHeader(IngestError):
    pass


class NonMonotonicTimestamp(IngestError):
    def __init__(self, row: int):
        super().__init__(f"timestamp does not increase at data row {row}")
        self.row = row


class UnparsableValue(IngestError):
    def __init__(self, row: int, detail: str = ""):
        super().__init__(f"cannot parse data row {row}" + (f": {detail}" if detail else ""))
        self.row = row


class ScoreOutOfRange(IngestError):
    def __init__(self, row: int, column: str, value):
        super().__init__(f"{column}={value!r} outside [{LIKERT_MIN}, {LIKERT_MAX}] at data row {row}")
        self.row = row
        self.column = column


class MissingColumn(IngestError):
    def __init__(self, name: str):
        super().__init__(f"missing column {name!r}")
        self.name = name


class DuplicateSessionId(IngestError):
    def __init__(self, session_id: str):
        super().__init__(f"session id {session_id!r} appears more than once")
        self.session_id = session_id


def _text(content: Content) -> str:
    if isinstance(content, bytes):
        try:
            return content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedHeader(f"content is not UTF-8: {exc}") from None
    return content


def _split_comments(text: str) -> tuple[dict[str, str], list[str]]:
    lines = text.splitlines()
    meta: dict[str, str] = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if "=" not in body:
            raise MalformedHeader(f"comment line {i + 1} is not '# key=value'")
        key, value = body.split("=", 1)
        meta[key.strip()] = value.strip()
        i += 1
    return meta, lines[i:]


def read_comments(content: Content) -> dict[str, str]:
    """All leading ``# key=value`` metadata of a file, in file order."""
    return _split_comments(_text(content))[0]


def _comment_block(meta: Mapping[str, str]) -> str:
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def _fmt(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


# ---------------------------------------------------------------------------
# signals


def parse_signal_csv(content: Content) -> PpgSession:
    meta, lines = _split_comments(_text(content))
    for key in ("session_id", "participant_id"):
        if key not in meta:
            raise MalformedHeader(f"missing '# {key}=' header line")
    if not lines or tuple(c.strip() for c in lines[0].split(",")) != SIGNAL_HEADER:
        raise MalformedHeader(f"expected column header {','.join(SIGNAL_HEADER)!r}")
    timestamps, values = [], []
    for row, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise UnparsableValue(row, "expected two fields")
        try:
            t = int(parts[0])
            v = float(parts[1])
        except ValueError as exc:
            raise UnparsableValue(row, str(exc)) from None
        if t < 0 or not math.isfinite(v):
            raise UnparsableValue(row, "negative timestamp or non-finite value")
        if timestamps and t <= timestamps[-1]:
            raise NonMonotonicTimestamp(row)
        timestamps.append(t)
        values.append(v)
    if "sample_rate_hz" in meta:
        try:
            rate = float(meta["sample_rate_hz"])
        except ValueError:
            raise MalformedHeader("sample_rate_hz is not a number") from None
        if not rate > 0:
            raise MalformedHeader("sample_rate_hz must be positive")
    else:
        rate = _inferred_rate(np.asarray(timestamps, dtype=np.int64))
    if not meta["session_id"]:
        raise MalformedHeader("empty session_id")
    return PpgSession(meta["session_id"], meta["participant_id"], timestamps, values, rate)


def _inferred_rate(timestamps: np.ndarray) -> float:
    if len(timestamps) > 1:
        return 1000.0 / float(np.median(np.diff(timestamps)))
    return NOMINAL_SAMPLE_RATE_HZ


def write_signal_csv(session: PpgSession, comments: Optional[Mapping[str, str]] = None) -> bytes:
    """Canonical bytes for ``session``.

    A ``sample_rate_hz`` line is written only when the rate cannot be
    recovered from the timestamps. Extra ``comments`` follow the identity
    lines.
    """
    meta = {"session_id": session.session_id, "participant_id": session.participant_id}
    if _inferred_rate(session.timestamps_ms) != session.sample_rate_hz:
        meta["sample_rate_hz"] = repr(float(session.sample_rate_hz))
    for k, v in (comments or {}).items():
        meta.setdefault(k, v)
    out = io.StringIO()
    out.write(_comment_block(meta))
    out.write(",".join(SIGNAL_HEADER) + "\n")
    for t, v in zip(session.timestamps_ms.tolist(), session.values.tolist()):
        out.write(f"{t},{v!r}\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# surveys


def _check_columns(header: Sequence[str], required: Sequence[str]):
    for name in required:
        if name not in header:
            raise MissingColumn(name)


def parse_survey_csv(content: Content) -> list[SurveyResponse]:
    _, lines = _split_comments(_text(content))
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        raise MissingColumn(SURVEY_HEADER[0])
    _check_columns([f.strip() for f in reader.fieldnames], SURVEY_HEADER)
    out = []
    for row_no, raw in enumerate(reader, start=1):
        row = {k.strip(): (v or "").strip() for k, v in raw.items() if k is not None}
        try:
            timestamp = int(row["timestamp_ms"])
        except ValueError:
            raise UnparsableValue(row_no, "timestamp_ms") from None
        scores = {}
        for name in EMOTIONS + ("cognitive_load",):
            try:
                value = int(row[name])
            except ValueError:
                raise UnparsableValue(row_no, name) from None
            if not LIKERT_MIN <= value <= LIKERT_MAX:
                raise ScoreOutOfRange(row_no, name, value)
            scores[name] = value
        load = scores.pop("cognitive_load")
        if not row["participant_id"]:
            raise UnparsableValue(row_no, "empty participant_id")
        out.append(SurveyResponse(row["participant_id"], row["session_id"] or None, timestamp, scores, load))
    return out


def write_survey_csv(responses: Iterable[SurveyResponse], comments: Optional[Mapping[str, str]] = None) -> bytes:
    out = io.StringIO()
    out.write(_comment_block(comments or {}))
    out.write(",".join(SURVEY_HEADER) + "\n")
    for r in responses:
        cells = [r.participant_id, r.session_id or "", str(r.timestamp_ms)]
        cells += [str(r.item_scores[name]) for name in EMOTIONS]
        cells.append(str(r.cognitive_load))
        out.write(",".join(cells) + "\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# features


def write_features_csv(rows: Iterable[AnalysisRow], comments: Optional[Mapping[str, str]] = None) -> bytes:
    out = io.StringIO()
    out.write(_comment_block(comments or {}))
    out.write(",".join(FEATURE_HEADER) + "\n")
    for row in rows:
        s = row.survey
        values = row.features.as_dict() if row.features is not None else {}
        cells = [s.participant_id, s.session_id or "", str(s.timestamp_ms)]
        cells += [_fmt(values.get(name)) for name in FEATURE_NAMES]
        cells.append((row.missing_reason or "").replace(",", ";"))
        out.write(",".join(cells) + "\n")
    return out.getvalue().encode("utf-8")


@dataclass(frozen=True)
class FeatureRecord:
    participant_id: str
    session_id: Optional[str]
    timestamp_ms: int
    features: Optional[HrvFeatures]
    missing_reason: Optional[str]


def parse_features_csv(content: Content) -> list[FeatureRecord]:
    _, lines = _split_comments(_text(content))
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        raise MissingColumn(FEATURE_HEADER[0])
    _check_columns(reader.fieldnames, FEATURE_HEADER)
    out = []
    for row_no, row in enumerate(reader, start=1):
        try:
            values = {name: float(row[name]) if row[name] else None for name in FEATURE_NAMES}
            timestamp = int(row["timestamp_ms"])
        except ValueError as exc:
            raise UnparsableValue(row_no, str(exc)) from None
        reason = row["missing_reason"] or None
        features = None
        if reason is None:
            required = [n for n in FEATURE_NAMES if n not in ("sd1_sd2", "breathing_rate")]
            if any(values[n] is None for n in required):
                raise UnparsableValue(row_no, "feature row without missing_reason has empty cells")
            features = HrvFeatures(**values)
        out.append(FeatureRecord(row["participant_id"], row["session_id"] or None, timestamp, features, reason))
    return out


def attach_features(surveys: Sequence[SurveyResponse], records: Sequence[FeatureRecord]) -> list[AnalysisRow]:
    """Pair each survey with its feature record by (participant_id, timestamp_ms)."""
    by_key = {(r.participant_id, r.timestamp_ms): r for r in records}
    rows = []
    for s in surveys:
        rec = by_key.get((s.participant_id, s.timestamp_ms))
        if rec is None:
            rows.append(AnalysisRow(s, None, "no feature record"))
        else:
            rows.append(AnalysisRow(s, rec.features, rec.missing_reason))
    return rows


# ---------------------------------------------------------------------------
# join


@dataclass
class Dataset:
    rows: list[tuple[SurveyResponse, Optional[PpgSession]]]
    join_report: dict[str, int] = field(default_factory=dict)


def _row_key(row):
    survey = row[0]
    return (survey.timestamp_ms, survey.participant_id, survey.session_id or "")


def join_dataset(sessions: Sequence[PpgSession], surveys: Sequence[SurveyResponse]) -> Dataset:
    """Attach each survey to the session sharing its session id.

    Rows are ordered by survey timestamp (then participant and session id)
    so the result does not depend on input order.
    """
    by_id: dict[str, PpgSession] = {}
    for session in sessions:
        if session.session_id in by_id:
            raise DuplicateSessionId(session.session_id)
        by_id[session.session_id] = session
    rows = []
    used = Counter()
    for survey in surveys:
        session = by_id.get(survey.session_id) if survey.session_id else None
        if session is not None:
            used[session.session_id] += 1
        rows.append((survey, session))
    rows.sort(key=_row_key)
    matched = sum(1 for _, s in rows if s is not None)
    report = {
        "matched": matched,
        "missing_signal": len(rows) - matched,
        "orphan_session": sum(1 for sid in by_id if sid not in used),
    }
    return Dataset(rows, report)
