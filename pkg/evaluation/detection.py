"""Scoring binary apnea detectors against a ground-truth timeline.

Time is accounted per step: every step contributes `step_s` seconds to one
of the four confusion buckets.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from errors import AlignmentError, InvalidInputError, UndefinedAxisError
from evaluation.metrics import check_aligned


@dataclass(frozen=True)
class LabeledTimeline:
    """Per-step labels; True marks apnea (a positive event)."""

    step_s: float
    labels: np.ndarray
    origin_s: float = 0.0

    def __post_init__(self):
        labels = np.array(self.labels, dtype=bool)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidInputError("timeline must hold at least one label")
        if not self.step_s > 0:
            raise InvalidInputError(f"timeline step must be positive, got {self.step_s}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.labels.size

    @property
    def times(self) -> np.ndarray:
        return self.origin_s + self.step_s * np.arange(len(self))


@dataclass(frozen=True)
class ScoreTimeline:
    """Per-step detector scores on the same grid as a LabeledTimeline."""

    step_s: float
    scores: np.ndarray
    origin_s: float = 0.0

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        if scores.ndim != 1 or scores.size == 0:
            raise InvalidInputError("score timeline must hold at least one score")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __len__(self):
        return self.scores.size


def _check_grid(a, b) -> None:
    check_aligned(len(a), a.step_s, len(b), b.step_s)
    if not math.isclose(a.origin_s, b.origin_s, rel_tol=0.0, abs_tol=1e-9 * max(1.0, a.step_s)):
        raise AlignmentError(f"timelines start at {a.origin_s} s and {b.origin_s} s")


@dataclass(frozen=True)
class ConfusionTimes:
    tp: float  # seconds
    tn: float
    fp: float
    fn: float

    @property
    def total(self) -> float:
        return self.tp + self.tn + self.fp + self.fn


def confusion_times(pred: LabeledTimeline, truth: LabeledTimeline) -> ConfusionTimes:
    _check_grid(pred, truth)
    p, t = pred.labels, truth.labels
    step = truth.step_s
    return ConfusionTimes(
        tp=float(np.count_nonzero(p & t) * step),
        tn=float(np.count_nonzero(~p & ~t) * step),
        fp=float(np.count_nonzero(p & ~t) * step),
        fn=float(np.count_nonzero(~p & t) * step),
    )


@dataclass(frozen=True)
class DetectionRates:
    """None marks a metric whose denominator vanished."""

    sensitivity: float | None
    specificity: float | None
    dor: float | None


def dor_from_rates(sensitivity: float, specificity: float) -> float | None:
    if sensitivity >= 1.0 or specificity >= 1.0:
        return None
    return sensitivity / (1.0 - sensitivity) * specificity / (1.0 - specificity)


def sens_spec_dor(ct: ConfusionTimes) -> DetectionRates:
    sensitivity = ct.tp / (ct.tp + ct.fn) if ct.tp + ct.fn > 0 else None
    specificity = ct.tn / (ct.tn + ct.fp) if ct.tn + ct.fp > 0 else None
    dor = (ct.tp * ct.tn) / (ct.fn * ct.fp) if ct.fn > 0 and ct.fp > 0 else None
    return DetectionRates(sensitivity, specificity, dor)


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray  # 1 - specificity
    tpr: np.ndarray  # sensitivity
    auc: float
    optimum_index: int
    direction: str = field(default="greater")

    @property
    def optimum_threshold(self) -> float:
        return float(self.thresholds[self.optimum_index])


def threshold_sweep(scores, n: int) -> np.ndarray:
    """`n` evenly spaced thresholds over the observed score range."""
    scores = np.asarray(scores, dtype=float)
    if n < 1:
        raise InvalidInputError(f"need at least one threshold, got {n}")
    return np.linspace(scores.min(), scores.max(), n)


def roc(
    scores: ScoreTimeline,
    truth: LabeledTimeline,
    thresholds,
    direction: str = "greater",
) -> RocCurve:
    """One (fpr, tpr) point per threshold. With direction "greater" a step is
    positive iff score >= threshold; with "less", iff score <= threshold."""
    _check_grid(scores, truth)
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.ndim != 1 or thresholds.size == 0 or np.any(np.diff(thresholds) < 0):
        raise InvalidInputError("thresholds must be a non-empty ascending sequence")
    if direction not in ("greater", "less"):
        raise InvalidInputError(f"direction must be 'greater' or 'less', got {direction!r}")
    t = truth.labels
    n_pos, n_neg = int(t.sum()), int((~t).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAxisError("truth holds a single class; one ROC axis is undefined")

    s = scores.scores[:, None]
    pred = s >= thresholds[None, :] if direction == "greater" else s <= thresholds[None, :]
    tpr = (pred & t[:, None]).sum(axis=0) / n_pos
    fpr = (pred & ~t[:, None]).sum(axis=0) / n_neg

    order = np.lexsort((tpr, fpr))
    xs = np.concatenate(([0.0], fpr[order], [1.0]))
    ys = np.concatenate(([0.0], tpr[order], [1.0]))
    auc = float(np.trapezoid(ys, xs))

    distance = np.hypot(fpr, 1.0 - tpr)
    # ties go to the higher threshold
    best = np.flatnonzero(distance <= distance.min() + 1e-12)
    return RocCurve(thresholds, fpr, tpr, auc, int(best[-1]), direction)
