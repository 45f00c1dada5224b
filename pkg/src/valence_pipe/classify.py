"""Chronological split, min-max scaling, multinomial naive Bayes, metrics."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ClassifyError
from .model import FEATURE_NAMES, LabeledSample

CLASSES = (1, -1)  # score order; ties go to +1
CONFUSION_ORDER = (-1, 1)
DEFAULT_TRAIN_FRACTION = 2 / 3
DEFAULT_ALPHA = 1.0
# log scores this close are one tie; summation order alone moves them ~1e-16
TIE_RTOL = 1e-12


class EmptyTestSet(ClassifyError):
    pass


class NegativeFeature(ClassifyError):
    pass


class SingleClass(ClassifyError):
    pass


class FeatureMismatch(ClassifyError):
    pass


class LengthMismatch(ClassifyError):
    pass


def chrono_split(samples: Sequence[LabeledSample], train_frac: float = DEFAULT_TRAIN_FRACTION):
    """Per participant, the earliest ``floor(train_frac * n)`` samples train.

    A participant with a single sample contributes it to training.
    """
    by_participant = defaultdict(list)
    for s in samples:
        by_participant[s.participant_id].append(s)
    train, test = [], []
    for pid in sorted(by_participant):
        ordered = sorted(by_participant[pid], key=lambda s: s.timestamp_ms)
        n = len(ordered)
        # small epsilon so 2/3 * 6 lands on 4 despite binary rounding
        k = n if n == 1 else math.floor(train_frac * n + 1e-9)
        train.extend(ordered[:k])
        test.extend(ordered[k:])
    if not test:
        raise EmptyTestSet("no participant contributed a test sample")
    return train, test


def feature_matrix(samples: Sequence[LabeledSample], names: Sequence[str] = FEATURE_NAMES) -> np.ndarray:
    """Rows of features; undefined values (ratio, breathing rate) are NaN."""
    out = np.empty((len(samples), len(names)))
    for i, s in enumerate(samples):
        values = s.features.as_dict()
        out[i] = [np.nan if values[n] is None else values[n] for n in names]
    return out


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    minimum: np.ndarray
    maximum: np.ndarray


def scale_fit_transform(x) -> tuple[MinMaxScaler, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ClassifyError("scaler needs a non-empty 2-D training matrix")
    with np.errstate(all="ignore"):
        lo = np.nanmin(np.where(np.isnan(x).all(axis=0), 0.0, x), axis=0)
        hi = np.nanmax(np.where(np.isnan(x).all(axis=0), 0.0, x), axis=0)
    scaler = MinMaxScaler(lo, hi)
    return scaler, scale_apply(scaler, x)


def scale_apply(scaler: MinMaxScaler, x) -> np.ndarray:
    """Map into [0, 1] by the training range; clip; constant or missing -> 0."""
    x = np.asarray(x, dtype=np.float64)
    span = scaler.maximum - scaler.minimum
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (x - scaler.minimum) / safe, 0.0)
    out = np.clip(out, 0.0, 1.0)
    return np.nan_to_num(out, nan=0.0)


@dataclass(frozen=True, eq=False)
class MnbModel:
    """Multinomial naive Bayes over non-negative feature "counts".

    Row ``i`` of ``feature_log_prob`` and entry ``i`` of ``class_log_prior``
    belong to ``CLASSES[i]``.
    """

    class_log_prior: np.ndarray
    feature_log_prob: np.ndarray
    alpha: float = DEFAULT_ALPHA
    scaler: Optional[MinMaxScaler] = None
    feature_names: tuple[str, ...] = FEATURE_NAMES

    @property
    def n_features(self) -> int:
        return self.feature_log_prob.shape[1]


def mnb_train(x, y, alpha: float = DEFAULT_ALPHA, scaler: Optional[MinMaxScaler] = None,
              feature_names: Optional[Sequence[str]] = None) -> MnbModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or len(x) != len(y):
        raise LengthMismatch("x must be 2-D with one row per label")
    if np.any(x < 0) or np.isnan(x).any():
        raise NegativeFeature("multinomial naive Bayes needs non-negative features")
    if alpha < 0:
        raise ClassifyError("alpha must be >= 0")
    n_features = x.shape[1]
    priors, likelihoods = [], []
    for c in CLASSES:
        rows = x[y == c]
        if len(rows) == 0:
            raise SingleClass(f"no training samples for class {c:+d}")
        priors.append(math.log(len(rows) / len(x)))
        counts = rows.sum(axis=0) + alpha
        with np.errstate(divide="ignore"):
            likelihoods.append(np.log(counts) - math.log(counts.sum()))
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(n_features))
    return MnbModel(np.array(priors), np.vstack(likelihoods), alpha, scaler, names)


def mnb_log_scores(model: MnbModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.n_features:
        raise FeatureMismatch(f"model has {model.n_features} features, input has {x.shape[1]}")
    if np.any(x < 0):
        raise NegativeFeature("multinomial naive Bayes needs non-negative features")
    # 0 * log(0) stays 0 for unsmoothed models
    terms = np.where(x[:, None, :] > 0, x[:, None, :] * model.feature_log_prob[None, :, :], 0.0)
    scores = model.class_log_prior[None, :] + terms.sum(axis=2)
    return scores[0] if single else scores


def _decide(scores: np.ndarray) -> np.ndarray:
    """+1 unless -1 wins by more than rounding; rows are (+1, -1) score pairs."""
    plus, minus = scores[:, 0], scores[:, 1]
    tol = TIE_RTOL * np.maximum(1.0, np.maximum(np.abs(plus), np.abs(minus)))
    return np.where(minus > plus + tol, CLASSES[1], CLASSES[0])


def mnb_predict(model: MnbModel, x) -> tuple[int, np.ndarray]:
    """Label of one scaled feature vector and its per-class log scores.

    Equal posteriors go to +1.
    """
    scores = mnb_log_scores(model, np.asarray(x, dtype=np.float64).ravel())
    return int(_decide(scores[None, :])[0]), scores


def mnb_predict_many(model: MnbModel, x) -> np.ndarray:
    return _decide(mnb_log_scores(model, np.atleast_2d(x)))


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy and support-weighted precision, recall and F1.

    ``confusion[i][j]`` counts true ``CONFUSION_ORDER[i]`` predicted as
    ``CONFUSION_ORDER[j]``.
    """

    accuracy: float
    f1: float
    precision: float
    recall: float
    confusion: tuple[tuple[int, int], tuple[int, int]]

    def as_row(self) -> dict[str, float]:
        return {"accuracy": self.accuracy, "f1": self.f1, "precision": self.precision, "recall": self.recall}


def evaluate(y_true, y_pred) -> MetricsReport:
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if not y_true:
        raise LengthMismatch("need at least one label")
    index = {c: i for i, c in enumerate(CONFUSION_ORDER)}
    conf = [[0, 0], [0, 0]]
    for t, p in zip(y_true, y_pred):
        conf[index[t]][index[p]] += 1
    total = len(y_true)
    precision = recall = f1 = 0.0
    for i in range(2):
        support = conf[i][0] + conf[i][1]
        predicted = conf[0][i] + conf[1][i]
        tp = conf[i][i]
        p = tp / predicted if predicted else 0.0
        r = tp / support if support else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        precision += support * p
        recall += support * r
        f1 += support * f
    accuracy = (conf[0][0] + conf[1][1]) / total
    return MetricsReport(accuracy, f1 / total, precision / total, recall / total, (tuple(conf[0]), tuple(conf[1])))


@dataclass(frozen=True)
class TaskResult:
    name: str
    n_train: int
    n_test: int
    metrics: MetricsReport


def run_task(name: str, samples: Sequence[LabeledSample], alpha: float = DEFAULT_ALPHA,
             train_frac: float = DEFAULT_TRAIN_FRACTION) -> TaskResult:
    """Split, scale, train and score one labelled task end to end."""
    train, test = chrono_split(samples, train_frac)
    scaler, x_train = scale_fit_transform(feature_matrix(train))
    model = mnb_train(x_train, [s.label for s in train], alpha, scaler, FEATURE_NAMES)
    predicted = mnb_predict_many(model, scale_apply(scaler, feature_matrix(test)))
    report = evaluate([s.label for s in test], predicted.tolist())
    return TaskResult(name, len(train), len(test), report)
