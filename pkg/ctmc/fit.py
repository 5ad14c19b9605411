"""Maximum-likelihood generator estimation: lambda_mn = N_mn / R_m, with
N_mn the m->n transition count and R_m the time spent in m."""

import logging
from dataclasses import dataclass

import numpy as np

from ctmc.generator import GeneratorMatrix
from errors import InsufficientDataError, NoTransitionsError
from quantizer.quantize import QuantizedTrajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitionStats:
    counts: np.ndarray  # N x N, zero diagonal
    holding_s: np.ndarray  # N

    def rates(self) -> GeneratorMatrix:
        if self.counts.sum() == 0:
            raise NoTransitionsError("path never leaves its initial state")
        visited = self.holding_s > 0
        safe = np.where(visited, self.holding_s, 1.0)
        rates = np.where(visited[:, np.newaxis], self.counts / safe[:, np.newaxis], 0.0)
        unvisited = frozenset(np.flatnonzero(~visited).tolist())
        if unvisited:
            logger.warning("states %s never visited, their rows are zero", sorted(unvisited))
        return GeneratorMatrix.from_off_diagonal(rates, unvisited)


def _pair_counts(states: np.ndarray, n_states: int) -> np.ndarray:
    src, dst = states[:-1], states[1:]
    jumps = src != dst
    counts = np.zeros((n_states, n_states))
    np.add.at(counts, (src[jumps], dst[jumps]), 1)
    return counts


def count_transitions(qt: QuantizedTrajectory) -> TransitionStats:
    """Treat the sampled sequence as a continuous path: every sample holds
    its state for one window step (the last one included, censored)."""
    if len(qt) < 2:
        raise InsufficientDataError(f"need at least 2 samples to count transitions, got {len(qt)}")
    n = qt.state_space.n_states
    holding = np.bincount(qt.state_indices, minlength=n) * qt.window_step_s
    return TransitionStats(_pair_counts(qt.state_indices, n), holding.astype(float))


def fit_generator(qt: QuantizedTrajectory) -> GeneratorMatrix:
    stats = count_transitions(qt)
    gen = stats.rates()
    logger.info("fitted %d-state generator from %d transitions", gen.n_states, int(stats.counts.sum()))
    return gen


def schedule_transitions(schedule) -> TransitionStats:
    """Exact counts and holding times of a simulated path."""
    n = schedule.state_space.n_states
    holding = np.bincount(schedule.states, weights=schedule.sojourns, minlength=n)
    return TransitionStats(_pair_counts(schedule.states, n), holding)


def fit_generator_from_schedule(schedule) -> GeneratorMatrix:
    return schedule_transitions(schedule).rates()
