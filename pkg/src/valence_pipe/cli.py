"""Command-line entry point: synth, extract, correlate, classify, report.

Every output file starts with ``# config_hash=<sha256>`` where the hash
covers the subcommand, its parameters and the digests of its inputs, so
identical runs produce byte-identical files. Failures print one JSON error
record to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import affect, classify, hrv, ingest, preprocess, stats, synth
from .errors import ConfigError, ValencePipeError
from .model import EMOTIONS, LIKERT_MAX, LIKERT_MIN, AnalysisRow, PpgSession, SurveyResponse

log = logging.getLogger("valence_pipe")

THREADS_ENV = "VALENCE_PIPE_THREADS"
DEFAULT_TASKS = ("positive_affect", "alert", "afraid", "active")
METRICS_HEADER = ("task", "n_train", "n_test", "accuracy", "f1", "precision", "recall", "error")
EXIT_CONFIG = 2
EXIT_PIPELINE = 1


def threads() -> int:
    """Worker count from ``VALENCE_PIPE_THREADS`` (0 or unset = CPU count)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def digest(content: bytes) -> str:
    return hashlib.sha256(content).hexdigest()


def atomic_write(path: Path, content: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(header: Sequence[str], rows, comments: dict) -> bytes:
    lines = [f"# {k}={v}" for k, v in comments.items()]
    lines.append(",".join(header))
    lines.extend(",".join(str(c) for c in row) for row in rows)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _num(value) -> str:
    value = float(value)
    return "" if np.isnan(value) else repr(value)


# ---------------------------------------------------------------------------
# inputs


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def signal_paths(entries: Sequence[str]) -> list[Path]:
    """Expand directories to their ``*.csv`` files, sorted by name."""
    out = []
    for entry in entries:
        p = Path(entry)
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        elif p.is_file():
            out.append(p)
        else:
            raise ConfigError(f"signal path {entry} does not exist")
    return out


def load_signals(entries: Sequence[str]) -> tuple[list[PpgSession], dict[str, str]]:
    sessions, digests = [], {}
    for path in signal_paths(entries):
        content = _read(path)
        digests[path.name] = digest(content)
        sessions.append(ingest.parse_signal_csv(content))
    return sessions, digests


def load_surveys(path) -> tuple[list[SurveyResponse], str]:
    content = _read(path)
    return ingest.parse_survey_csv(content), digest(content)


def load_rows(surveys_path, features_path) -> tuple[list[AnalysisRow], dict[str, str]]:
    surveys, survey_digest = load_surveys(surveys_path)
    content = _read(features_path)
    rows = ingest.attach_features(surveys, ingest.parse_features_csv(content))
    return rows, {"surveys": survey_digest, "features": digest(content)}


# ---------------------------------------------------------------------------
# pipeline


def features_for(
    session: PpgSession,
    report_time_ms: int,
    band: tuple[float, float] = preprocess.DEFAULT_BAND_HZ,
    order: int = preprocess.DEFAULT_ORDER,
    half_width_s: float = preprocess.DEFAULT_HALF_WIDTH_S,
):
    """Window, filter and extract; returns (features, None) or (None, reason)."""
    try:
        segment = preprocess.extract_window(session, report_time_ms, half_width_s)
        segment = preprocess.bandpass(segment, band[0], band[1], order)
        return hrv.compute_features(segment), None
    except (preprocess.WindowTooShort, preprocess.EmptyWindow, hrv.NoPlausiblePeaks, hrv.TooFewIntervals) as exc:
        return None, f"{exc.stage}: {type(exc).__name__}"


def extract_rows(dataset: ingest.Dataset, band, order, half_width_s, workers: int = 1):
    """Feature rows in dataset order plus the attrition counts."""

    def one(pair):
        survey, session = pair
        if session is None:
            return AnalysisRow(survey, None, "missing_signal")
        features, reason = features_for(session, survey.timestamp_ms, band, order, half_width_s)
        return AnalysisRow(survey, features, reason)

    if workers > 1 and len(dataset.rows) > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, dataset.rows))
    else:
        rows = [one(pair) for pair in dataset.rows]
    report = dict(dataset.join_report)
    report["responses"] = len(rows)
    report["with_features"] = sum(1 for r in rows if r.features is not None)
    failed = Counter(r.missing_reason for r in rows if r.features is None and r.missing_reason != "missing_signal")
    report["feature_failed"] = sum(failed.values())
    for reason in sorted(failed):
        report[f"failed[{reason}]"] = failed[reason]
    return rows, report


def task_rules(targets: Sequence[str], high: Optional[int], low: Optional[int]) -> list[affect.LabelRule]:
    rules = []
    for target in targets or DEFAULT_TASKS:
        default = affect.LabelRule.default(target) if target in affect.AFFECT_TARGETS + EMOTIONS else None
        if default is None:
            raise ConfigError(f"unknown target {target!r}")
        try:
            rules.append(affect.LabelRule(
                target,
                default.high_min if high is None else high,
                default.low_max if low is None else low,
            ))
        except ValencePipeError as exc:
            raise ConfigError(str(exc)) from None
    return rules


def classify_rows(rows: Sequence[AnalysisRow], rules: Sequence[affect.LabelRule], alpha: float, workers: int = 1):
    """One metrics row per rule; a failing task records its error instead."""

    def one(rule):
        try:
            result = classify.run_task(rule.target, affect.build_task(rows, rule), alpha)
        except (affect.EmptyClass, classify.ClassifyError) as exc:
            return (rule.target, 0, 0, "", "", "", "", type(exc).__name__)
        m = result.metrics
        return (rule.target, result.n_train, result.n_test,
                _num(m.accuracy), _num(m.f1), _num(m.precision), _num(m.recall), "")

    if workers > 1 and len(rules) > 1:
        with ThreadPoolExecutor(min(workers, len(rules))) as pool:
            return list(pool.map(one, rules))
    return [one(rule) for rule in rules]


def histograms(surveys: Sequence[SurveyResponse]) -> dict[str, tuple[tuple[str, ...], list[tuple]]]:
    """Count tables for item scores, affect sums, cognitive load and hour of day (UTC)."""
    scores = range(LIKERT_MIN, LIKERT_MAX + 1)
    item_counts = {name: Counter(s.item_scores[name] for s in surveys) for name in EMOTIONS}
    items = [(v,) + tuple(item_counts[name][v] for name in EMOTIONS) for v in scores]

    sums = [affect.affect_scores(s) for s in surveys]
    pa = Counter(a.positive_affect for a in sums)
    na = Counter(a.negative_affect for a in sums)
    totals = range(5 * LIKERT_MIN, 5 * LIKERT_MAX + 1)
    affect_rows = [(v, pa[v], na[v]) for v in totals]

    load = Counter(s.cognitive_load for s in surveys)
    load_rows = [(v, load[v]) for v in scores]

    hours = Counter(datetime.fromtimestamp(s.timestamp_ms / 1000, tz=timezone.utc).hour for s in surveys)
    hour_rows = [(h, hours[h]) for h in range(24)]
    return {
        "hist_items": (("score",) + EMOTIONS, items),
        "hist_affect": (("sum", "positive_affect", "negative_affect"), affect_rows),
        "hist_cognitive_load": (("score", "count"), load_rows),
        "hist_hour": (("hour_utc", "count"), hour_rows),
    }


# ---------------------------------------------------------------------------
# subcommands


def _band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must look like 0.5:6.0, got {text!r}") from None
    return lo, hi


def cmd_synth(args, out: Path) -> dict:
    if args.participants < 1 or args.responses < 1:
        raise ConfigError("--participants and --responses must be >= 1")
    if args.effect < 0:
        raise ConfigError("--effect must be >= 0")
    if not 0 <= args.phone_only <= 1:
        raise ConfigError("--phone-only must lie in [0, 1]")
    config = {"command": "synth", "participants": args.participants, "responses": args.responses,
              "effect": args.effect, "seed": args.seed, "phone_only": args.phone_only}
    comments = {"config_hash": config_hash(config)}
    cohort = synth.gen_cohort(args.participants, args.responses, args.effect, args.seed,
                              args.phone_only, workers=threads())
    for session in cohort.sessions:
        atomic_write(out / "signals" / f"{session.session_id}.csv", ingest.write_signal_csv(session, comments))
    atomic_write(out / "surveys.csv", ingest.write_survey_csv(cohort.surveys, comments))
    labels = [(pid, t, label) for (pid, t), label in sorted(cohort.labels.items())]
    atomic_write(out / "labels.csv", _table(("participant_id", "timestamp_ms", "label"), labels, comments))
    return {"sessions": len(cohort.sessions), "responses": len(cohort.surveys)}


def cmd_extract(args, out: Path) -> dict:
    if args.window <= 0:
        raise ConfigError("--window must be positive")
    if args.order < 1:
        raise ConfigError("--order must be >= 1")
    if not 0 < args.band[0] < args.band[1]:
        raise ConfigError("--band needs 0 < low < high")
    sessions, signal_digests = load_signals(args.signals)
    surveys, survey_digest = load_surveys(args.surveys)
    config = {"command": "extract", "band": list(args.band), "order": args.order, "window": args.window,
              "signals": signal_digests, "surveys": survey_digest}
    comments = {"config_hash": config_hash(config)}
    rows, report = extract_rows(ingest.join_dataset(sessions, surveys), args.band, args.order, args.window, threads())
    atomic_write(out / "features.csv", ingest.write_features_csv(rows, comments))
    atomic_write(out / "attrition.csv", _table(("metric", "count"), list(report.items()), comments))
    return report


def cmd_correlate(args, out: Path) -> dict:
    if not 0 < args.alpha < 1:
        raise ConfigError("--alpha must lie in (0, 1)")
    rows, digests = load_rows(args.surveys, args.features)
    config = {"command": "correlate", "alpha": args.alpha, **digests}
    comments = {"config_hash": config_hash(config)}
    matrix = stats.correlation_matrix([stats.row_values(r) for r in rows], alpha=args.alpha, workers=threads())
    header = ("variable",) + matrix.variable_names
    tables = {
        "r": matrix.r,
        "p": matrix.p,
        "mask": matrix.significant.astype(int),
        "n": matrix.n,
    }
    for name, values in tables.items():
        body = []
        for var, line in zip(matrix.variable_names, values):
            cells = [str(int(v)) for v in line] if values.dtype.kind in "iub" else [_num(v) for v in line]
            body.append((var, *cells))
        atomic_write(out / f"{name}.csv", _table(header, body, comments))
    return {"variables": len(matrix.variable_names), "significant_pairs": int(np.triu(matrix.significant, 1).sum())}


def cmd_classify(args, out: Path) -> dict:
    if args.alpha < 0:
        raise ConfigError("--alpha must be >= 0")
    rules = task_rules(args.target, args.high, args.low)
    rows, digests = load_rows(args.surveys, args.features)
    config = {"command": "classify", "alpha": args.alpha,
              "tasks": [[r.target, r.high_min, r.low_max] for r in rules], **digests}
    comments = {"config_hash": config_hash(config)}
    metrics = classify_rows(rows, rules, args.alpha, threads())
    atomic_write(out / "metrics.csv", _table(METRICS_HEADER, metrics, comments))
    return {row[0]: row[3] or row[7] for row in metrics}


def cmd_report(args, out: Path) -> dict:
    surveys, survey_digest = load_surveys(args.surveys)
    comments = {"config_hash": config_hash({"command": "report", "surveys": survey_digest})}
    for name, (header, rows) in histograms(surveys).items():
        atomic_write(out / f"{name}.csv", _table(header, rows, comments))
    return {"responses": len(surveys)}


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "correlate": cmd_correlate,
    "classify": cmd_classify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="valence-pipe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--participants", type=int, default=15)
    p.add_argument("--responses", type=int, default=20)
    p.add_argument("--effect", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--phone-only", type=float, default=0.0, help="fraction of responses without a signal")

    p = sub.add_parser("extract", help="HRV features for every survey response")
    p.add_argument("--signals", nargs="+", required=True, help="signal CSV files or directories")
    p.add_argument("--surveys", required=True)
    p.add_argument("--band", type=_band, default=preprocess.DEFAULT_BAND_HZ, help="low:high in Hz")
    p.add_argument("--order", type=int, default=preprocess.DEFAULT_ORDER)
    p.add_argument("--window", type=float, default=preprocess.DEFAULT_HALF_WIDTH_S,
                   help="half-width in seconds around the report time")

    p = sub.add_parser("correlate", help="Pearson matrix with significance mask")
    p.add_argument("--surveys", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--alpha", type=float, default=stats.DEFAULT_ALPHA)

    p = sub.add_parser("classify", help="naive Bayes metrics per label task")
    p.add_argument("--surveys", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--target", action="append", default=[], help="repeatable; default: positive_affect, alert, afraid, active")
    p.add_argument("--high", type=int, help="minimum score labelled +1")
    p.add_argument("--low", type=int, help="maximum score labelled -1")
    p.add_argument("--alpha", type=float, default=classify.DEFAULT_ALPHA, help="Laplace smoothing")

    p = sub.add_parser("report", help="histograms of survey answers")
    p.add_argument("--surveys", required=True)

    for p in sub.choices.values():
        p.add_argument("--out", required=True, help="output directory")
    return parser


def _fail(exc: ValencePipeError, code: int) -> int:
    print(json.dumps(exc.record(), sort_keys=True), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        summary = COMMANDS[args.command](args, Path(args.out))
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except ValencePipeError as exc:
        return _fail(exc, EXIT_PIPELINE)
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
