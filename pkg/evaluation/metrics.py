"""Model-validation metrics: KL divergence, occupancy and RR accuracy."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

import config
from errors import AlignmentError, InfiniteDivergenceError, InsufficientDataError, InvalidInputError
from quantizer.quantize import QuantizedTrajectory
from respiration.records import RrTrajectory

PMF_SUM_TOL = 1e-9


def _pmf(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be a non-empty vector of non-negative probabilities")
    if abs(arr.sum() - 1.0) > PMF_SUM_TOL:
        raise InvalidInputError(f"{name} sums to {arr.sum()!r}, not 1")
    return arr


def kl_divergence(p, q) -> float:
    """D(p || q) in bits."""
    p, q = _pmf(p, "p"), _pmf(q, "q")
    if p.shape != q.shape:
        raise InvalidInputError(f"supports differ: {p.size} vs {q.size} states")
    terms = rel_entr(p, q)
    if np.any(np.isinf(terms)):
        states = np.flatnonzero((p > 0) & (q == 0)).tolist()
        raise InfiniteDivergenceError(f"p has mass where q has none (states {states})")
    return float(terms.sum() / math.log(2))


def occupancy_pmf(qt: QuantizedTrajectory) -> np.ndarray:
    if len(qt) == 0:
        raise InsufficientDataError("cannot build a histogram from an empty trajectory")
    counts = np.bincount(qt.state_indices, minlength=qt.state_space.n_states)
    return counts / counts.sum()


@dataclass(frozen=True)
class RrAccuracy:
    p_correct: float | None  # None when no window has a positive true rate
    rmse_hz: float
    normalized_rmse: float | None
    n_windows: int


def check_aligned(a_len: int, a_step: float, b_len: int, b_step: float) -> None:
    if a_len != b_len or not math.isclose(a_step, b_step, rel_tol=1e-9):
        raise AlignmentError(
            f"timelines differ: {a_len} steps of {a_step} s vs {b_len} steps of {b_step} s"
        )


def rr_accuracy(
    estimated: RrTrajectory,
    truth: RrTrajectory,
    tolerance_fraction: float = config.TOLERANCE_FRACTION,
) -> RrAccuracy:
    check_aligned(len(estimated), estimated.window_step_s, len(truth), truth.window_step_s)
    if len(truth) == 0:
        raise InsufficientDataError("no windows to compare")
    est, true = estimated.values, truth.values
    breathing = true > 0
    p_correct = None
    if breathing.any():
        hits = np.abs(est[breathing] - true[breathing]) <= tolerance_fraction * true[breathing]
        p_correct = float(hits.mean())
    rmse = float(np.sqrt(np.mean((est - true) ** 2)))
    mean_true = float(true.mean())
    return RrAccuracy(
        p_correct=p_correct,
        rmse_hz=rmse,
        normalized_rmse=rmse / mean_true if mean_true > 0 else None,
        n_windows=len(truth),
    )
