"""Pearson correlation with t-test p-values, and the masked matrix."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .affect import affect_scores
from .errors import StatsError
from .model import EMOTIONS, FEATURE_NAMES, AnalysisRow

# emotions, cognitive load, the two sums, then the signal features
DEFAULT_VARIABLES = EMOTIONS + ("cognitive_load", "positive_affect", "negative_affect") + FEATURE_NAMES
DEFAULT_ALPHA = 0.05


class ConstantInput(StatsError):
    pass


class LengthMismatch(StatsError):
    pass


class TooFewSamples(StatsError):
    pass


def t_two_sided_p(r: float, n: int) -> float:
    """Two-sided p-value of ``r`` under the t-test with ``n - 2`` dof.

    With ``t = r sqrt((n-2)/(1-r^2))`` the tail probability equals
    ``I_x(df/2, 1/2)`` at ``x = df/(df+t^2) = 1 - r^2``.
    """
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    return _kernels.betainc(0.5 * df, 0.5, (1.0 - r) * (1.0 + r))


def pearson(x, y) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"lengths differ: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 3:
        raise TooFewSamples(f"need at least 3 paired samples, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("correlation undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    return r, t_two_sided_p(r, n)


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Pairwise-complete Pearson matrix.

    ``defined`` is False where a cell could not be computed (constant input
    or fewer than 3 pairs); those cells hold NaN and count as masked.
    """

    variable_names: tuple[str, ...]
    r: np.ndarray
    p: np.ndarray
    n: np.ndarray
    defined: np.ndarray
    alpha: float = DEFAULT_ALPHA

    @property
    def significant(self) -> np.ndarray:
        return self.defined & (np.nan_to_num(self.p, nan=1.0) < self.alpha)

    @property
    def masked(self) -> np.ndarray:
        return ~self.significant

    def cell(self, a: str, b: str) -> tuple[float, float]:
        i, j = self.variable_names.index(a), self.variable_names.index(b)
        return float(self.r[i, j]), float(self.p[i, j])


def row_values(row: AnalysisRow) -> dict[str, Optional[float]]:
    """All correlatable variables of an analysis row (None when missing)."""
    s = row.survey
    out: dict[str, Optional[float]] = {name: float(s.item_scores[name]) for name in EMOTIONS}
    out["cognitive_load"] = float(s.cognitive_load)
    scores = affect_scores(s)
    out["positive_affect"] = float(scores.positive_affect)
    out["negative_affect"] = float(scores.negative_affect)
    features = row.features.as_dict() if row.features is not None else {}
    for name in FEATURE_NAMES:
        out[name] = features.get(name)
    return out


def correlation_matrix(
    rows: Sequence[Mapping[str, Optional[float]]],
    variables: Sequence[str] = DEFAULT_VARIABLES,
    alpha: float = DEFAULT_ALPHA,
    workers: int = 1,
) -> CorrelationMatrix:
    variables = tuple(variables)
    k = len(variables)
    data = np.full((len(rows), k), np.nan)
    for i, row in enumerate(rows):
        for j, name in enumerate(variables):
            v = row.get(name)
            if v is not None:
                data[i, j] = v
    present = ~np.isnan(data)

    r = np.full((k, k), np.nan)
    p = np.full((k, k), np.nan)
    n = np.zeros((k, k), dtype=np.int64)
    defined = np.zeros((k, k), dtype=bool)

    def cell(ij):
        i, j = ij
        both = present[:, i] & present[:, j]
        try:
            return ij, int(both.sum()), pearson(data[both, i], data[both, j])
        except (ConstantInput, TooFewSamples):
            return ij, int(both.sum()), None

    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(cell, pairs))
    else:
        results = [cell(ij) for ij in pairs]
    for (i, j), count, rp in results:
        n[i, j] = n[j, i] = count
        if rp is not None:
            r[i, j] = r[j, i] = rp[0]
            p[i, j] = p[j, i] = rp[1]
            defined[i, j] = defined[j, i] = True
    for i in range(k):
        r[i, i], p[i, i] = 1.0, 0.0
        n[i, i] = int(present[:, i].sum())
        defined[i, i] = True
    return CorrelationMatrix(variables, r, p, n, defined, alpha)
