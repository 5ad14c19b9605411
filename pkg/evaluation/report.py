"""Report JSON, ROC CSV and label/score timeline files."""

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from errors import DataFormatError, InsufficientDataError
from evaluation.detection import ConfusionTimes, DetectionRates, LabeledTimeline, RocCurve, ScoreTimeline
from evaluation.events import ApneaEventSummary
from evaluation.metrics import RrAccuracy
from respiration.csv_io import fmt, parse_float, read_commented_csv, write_commented_csv

ROC_HEADER = ["threshold", "fpr", "tpr"]
LABEL_HEADER = ["time_s", "apnea"]
SCORE_HEADER = ["time_s", "score"]


def metric(value, unit: str) -> dict:
    return {"value": value, "unit": unit}


def rr_accuracy_metrics(acc: RrAccuracy) -> dict:
    return {
        "p_correct": metric(acc.p_correct, "fraction"),
        "rmse": metric(acc.rmse_hz, "Hz"),
        "normalized_rmse": metric(acc.normalized_rmse, "fraction"),
        "windows": metric(acc.n_windows, "count"),
    }


def detection_metrics(ct: ConfusionTimes, rates: DetectionRates) -> dict:
    return {
        "t_tp": metric(ct.tp, "s"),
        "t_tn": metric(ct.tn, "s"),
        "t_fp": metric(ct.fp, "s"),
        "t_fn": metric(ct.fn, "s"),
        "sensitivity": metric(rates.sensitivity, "fraction"),
        "specificity": metric(rates.specificity, "fraction"),
        "dor": metric(rates.dor, "ratio"),
    }


def roc_metrics(curve: RocCurve) -> dict:
    return {
        "auc": metric(curve.auc, "fraction"),
        "optimum_threshold": metric(curve.optimum_threshold, "score"),
        "optimum_fpr": metric(float(curve.fpr[curve.optimum_index]), "fraction"),
        "optimum_tpr": metric(float(curve.tpr[curve.optimum_index]), "fraction"),
    }


def event_metrics(summary: ApneaEventSummary) -> dict:
    units = {"pauses": "count", "apneas": "count", "severe_apneas": "count"}
    return {name: metric(value, units.get(name, "s")) for name, value in asdict(summary).items()}


def write_report(path: str | Path, metrics: dict, config: dict | None = None) -> None:
    """Metrics keyed by name, each {"value", "unit"}; undefined values are null."""
    doc = {"metrics": metrics, "config": config or {}}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_roc_csv(path: str | Path, curve: RocCurve) -> None:
    rows = ((fmt(t), fmt(x), fmt(y)) for t, x, y in zip(curve.thresholds, curve.fpr, curve.tpr))
    write_commented_csv(path, ROC_HEADER, rows, {"direction": curve.direction, "auc": fmt(curve.auc)})


def _grid_comments(step_s: float, origin_s: float, comments: dict | None) -> dict:
    meta = {"step_s": fmt(step_s), "origin_s": fmt(origin_s)}
    meta.update(comments or {})
    return meta


def save_labels(path: str | Path, timeline: LabeledTimeline, comments: dict | None = None) -> None:
    rows = ((fmt(t), int(v)) for t, v in zip(timeline.times, timeline.labels))
    write_commented_csv(path, LABEL_HEADER, rows, _grid_comments(timeline.step_s, timeline.origin_s, comments))


def save_scores(path: str | Path, scores: ScoreTimeline, comments: dict | None = None) -> None:
    times = scores.origin_s + scores.step_s * np.arange(len(scores))
    rows = ((fmt(t), fmt(v)) for t, v in zip(times, scores.scores))
    write_commented_csv(path, SCORE_HEADER, rows, _grid_comments(scores.step_s, scores.origin_s, comments))


def _load_grid(path: str | Path, header: list[str]):
    meta, rows = read_commented_csv(path)
    if not rows or [c.strip() for c in rows[0][1]] != header:
        raise DataFormatError(f"{path}: expected header {','.join(header)}", rows[0][0] if rows else None)
    times, values = [], []
    for line_no, row in rows[1:]:
        if len(row) != 2:
            raise DataFormatError(f"expected 2 columns, got {len(row)}", line_no)
        times.append(parse_float(row[0], line_no, header[0]))
        values.append(parse_float(row[1], line_no, header[1]))
    if not values:
        raise InsufficientDataError(f"{path} holds no rows")
    if "step_s" in meta:
        step = parse_float(meta["step_s"], 0, "step_s")
    elif len(times) >= 2:
        step = (times[-1] - times[0]) / (len(times) - 1)
    else:
        raise InsufficientDataError(f"{path}: cannot infer the step from one row")
    origin = parse_float(meta["origin_s"], 0, "origin_s") if "origin_s" in meta else times[0]
    return step, np.asarray(values), origin


def load_labels(path: str | Path) -> LabeledTimeline:
    step, values, origin = _load_grid(path, LABEL_HEADER)
    if np.any((values != 0) & (values != 1)):
        raise DataFormatError(f"{path}: apnea labels must be 0 or 1")
    return LabeledTimeline(step, values.astype(bool), origin)


def load_scores(path: str | Path) -> ScoreTimeline:
    step, values, origin = _load_grid(path, SCORE_HEADER)
    return ScoreTimeline(step, values, origin)
