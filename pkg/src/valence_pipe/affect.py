"""PANAS sums and binary high/low labelling."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import AffectError
from .model import (
    EMOTIONS,
    NEGATIVE_ITEMS,
    POSITIVE_ITEMS,
    AffectScores,
    AnalysisRow,
    LabeledSample,
    SurveyResponse,
)

log = logging.getLogger(__name__)

AFFECT_TARGETS = ("positive_affect", "negative_affect")
AFFECT_THRESHOLDS = (17, 14)
EMOTION_THRESHOLDS = (4, 2)


class EmptyClass(AffectError):
    pass


@dataclass(frozen=True)
class LabelRule:
    """``score >= high_min`` is +1, ``score <= low_max`` is -1, else excluded."""

    target: str
    high_min: int
    low_max: int

    def __post_init__(self):
        if self.target not in AFFECT_TARGETS + EMOTIONS:
            raise AffectError(f"unknown label target {self.target!r}")
        if not self.low_max < self.high_min:
            raise AffectError(f"low_max ({self.low_max}) must be below high_min ({self.high_min})")

    @classmethod
    def default(cls, target: str) -> "LabelRule":
        high, low = AFFECT_THRESHOLDS if target in AFFECT_TARGETS else EMOTION_THRESHOLDS
        return cls(target, high, low)

    def score(self, survey: SurveyResponse) -> int:
        if self.target in AFFECT_TARGETS:
            return getattr(affect_scores(survey), self.target)
        return survey.item_scores[self.target]


def affect_scores(survey: SurveyResponse) -> AffectScores:
    return AffectScores(
        sum(survey.item_scores[name] for name in POSITIVE_ITEMS),
        sum(survey.item_scores[name] for name in NEGATIVE_ITEMS),
    )


def apply_label(score: int, rule: LabelRule) -> Optional[int]:
    """+1, -1, or ``None`` for the excluded middle band."""
    if score >= rule.high_min:
        return 1
    if score <= rule.low_max:
        return -1
    return None


def label_counts(scores: Iterable[int], rule: LabelRule) -> Counter:
    return Counter(apply_label(s, rule) for s in scores)


def build_task(rows: Iterable[AnalysisRow], rule: LabelRule) -> list[LabeledSample]:
    """Labelled samples for ``rule``, dropping featureless and neutral rows."""
    samples = []
    for row in rows:
        if row.features is None:
            continue
        label = apply_label(rule.score(row.survey), rule)
        if label is None:
            continue
        s = row.survey
        samples.append(
            LabeledSample(s.participant_id, s.timestamp_ms, row.features, affect_scores(s), s.item_scores, label)
        )
    counts = Counter(x.label for x in samples)
    log.info("task %s: %d high, %d low", rule.target, counts[1], counts[-1])
    if counts[1] == 0 or counts[-1] == 0:
        raise EmptyClass(f"task {rule.target}: {counts[1]} high and {counts[-1]} low samples")
    return samples
