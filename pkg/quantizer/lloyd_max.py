"""Lloyd-Max scalar quantizer fitted to an empirical sample."""

import logging
from dataclasses import dataclass

import numpy as np

from errors import DegenerateInputError, InvalidInputError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 500
SHIFT_TOL = 1e-9  # Hz


@dataclass(frozen=True)
class LloydMaxFit:
    levels: np.ndarray
    distortion_history: tuple[float, ...]
    iterations: int
    converged: bool


def nearest_cells(values: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Cell index of each value; a value on a boundary goes to the lower cell."""
    boundaries = (levels[:-1] + levels[1:]) / 2
    return np.searchsorted(boundaries, values, side="left")


def distortion(values: np.ndarray, levels: np.ndarray) -> float:
    return float(np.mean((values - levels[nearest_cells(values, levels)]) ** 2))


def initial_levels(values: np.ndarray, n_levels: int) -> np.ndarray:
    ranks = (2 * np.arange(n_levels) + 1) / (2 * n_levels)
    levels = np.quantile(values, ranks)
    if np.all(np.diff(levels) > 0):
        return levels
    # heavy point masses collapse quantiles, fall back to spread distinct values
    distinct = np.unique(values)
    picks = np.round(np.linspace(0, distinct.size - 1, n_levels)).astype(int)
    return distinct[picks].astype(float)


def lloyd_max_fit(values, n_levels: int, max_iter: int = MAX_ITERATIONS, tol: float = SHIFT_TOL) -> LloydMaxFit:
    values = np.sort(np.asarray(values, dtype=float).ravel())
    if n_levels < 1:
        raise InvalidInputError(f"level count must be at least 1, got {n_levels}")
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise InvalidInputError("Lloyd-Max needs a non-empty sample of finite values")
    n_distinct = np.unique(values).size
    if n_distinct < n_levels:
        deficit = n_levels - n_distinct
        raise DegenerateInputError(
            f"{n_distinct} distinct values cannot support {n_levels} levels (short by {deficit})",
            deficit,
        )

    levels = initial_levels(values, n_levels)
    history = [distortion(values, levels)]
    converged = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        cells = nearest_cells(values, levels)
        counts = np.bincount(cells, minlength=n_levels)
        sums = np.bincount(cells, weights=values, minlength=n_levels)
        # an empty cell keeps its level
        updated = np.where(counts > 0, sums / np.maximum(counts, 1), levels)
        shift = float(np.max(np.abs(updated - levels)))
        levels = updated
        history.append(distortion(values, levels))
        if shift < tol:
            converged = True
            break

    logger.debug("Lloyd-Max: %d levels, %d iterations, distortion %.3e", n_levels, iterations, history[-1])
    return LloydMaxFit(levels, tuple(history), iterations, converged)


def lloyd_max(values, n_levels: int) -> np.ndarray:
    return lloyd_max_fit(values, n_levels).levels
