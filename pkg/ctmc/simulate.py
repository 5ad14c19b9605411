"""Sojourn-time simulation: initial state from the stationary
distribution, exponential holding times by inverse CDF, destinations from
the embedded-chain rows."""

import bisect
import logging
import math
from dataclasses import dataclass

import numpy as np

from ctmc.generator import GeneratorMatrix, embedded_chain, stationary
from errors import ConsistencyError, InvalidInputError
from quantizer.quantize import QuantizedTrajectory
from quantizer.state_space import StateSpace

logger = logging.getLogger(__name__)

_BATCH = 4096


@dataclass(frozen=True)
class SojournSchedule:
    states: np.ndarray
    sojourns: np.ndarray  # seconds
    state_space: StateSpace
    seed: int | None = None

    def __post_init__(self):
        states = np.array(self.states, dtype=np.int64)
        sojourns = np.array(self.sojourns, dtype=float)
        states.setflags(write=False)
        sojourns.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "sojourns", sojourns)
        if states.ndim != 1 or states.shape != sojourns.shape:
            raise InvalidInputError("states and sojourns must be equal-length 1-D sequences")
        if states.size and (states.min() < 0 or states.max() >= self.state_space.n_states):
            raise InvalidInputError("schedule refers to states outside the state space")
        if np.any(~(sojourns > 0)):
            raise InvalidInputError("sojourn times must be positive")
        if np.any(states[1:] == states[:-1]):
            raise InvalidInputError("consecutive sojourns must change state")

    def __len__(self):
        return self.states.size

    @property
    def jump_times(self) -> np.ndarray:
        """t_l = sum of the first l sojourns (end of each sojourn)."""
        return np.cumsum(self.sojourns)

    @property
    def start_times(self) -> np.ndarray:
        return np.concatenate(([0.0], self.jump_times[:-1])) if len(self) else np.zeros(0)

    @property
    def duration(self) -> float:
        return float(self.sojourns.sum())

    @property
    def rates(self) -> np.ndarray:
        return self.state_space.rates[self.states]

    def occupancy(self) -> np.ndarray:
        """Fraction of time spent in each state."""
        time = np.bincount(self.states, weights=self.sojourns, minlength=self.state_space.n_states)
        return time / time.sum()

    def state_at(self, times) -> np.ndarray:
        idx = np.searchsorted(self.jump_times, np.asarray(times, dtype=float), side="right")
        return self.states[np.minimum(idx, len(self) - 1)]

    def sample(self, step_s: float, origin_s: float = 0.0) -> QuantizedTrajectory:
        """States at origin + j * step for every instant inside the schedule."""
        n = int(math.floor((self.duration - origin_s) / step_s - 1e-12)) + 1
        times = origin_s + step_s * np.arange(max(n, 0))
        return QuantizedTrajectory(self.state_at(times), step_s, self.state_space)


class UniformStream:
    """Batched draws in [0, 1) from a seeded PCG64 generator."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)
        self._buffer: list[float] = []

    def next(self) -> float:
        if not self._buffer:
            self._buffer = self._rng.random(_BATCH).tolist()[::-1]
        return self._buffer.pop()


def _inverse_cdf(cumulative: list[float], u: float) -> int:
    return min(bisect.bisect_right(cumulative, u * cumulative[-1]), len(cumulative) - 1)


def simulate(
    gen: GeneratorMatrix,
    ss: StateSpace,
    duration: float,
    seed: int,
    allow_partial: bool = False,
) -> SojournSchedule:
    if not duration > 0:
        raise InvalidInputError(f"duration must be positive, got {duration}")
    if gen.n_states != ss.n_states:
        raise ConsistencyError(f"generator has {gen.n_states} states, state space {ss.n_states}")

    pi = stationary(gen, allow_partial=allow_partial).probabilities
    active = np.flatnonzero(pi > 0)
    stream = UniformStream(seed)
    first = int(active[_inverse_cdf(np.cumsum(pi[active]).tolist(), stream.next())])
    if active.size == 1:
        return SojournSchedule([first], [duration], ss, seed)

    sub = GeneratorMatrix.from_off_diagonal(gen.entries[np.ix_(active, active)])
    jump_cdf = [np.cumsum(row).tolist() for row in embedded_chain(sub).probabilities]
    exit_rates = sub.exit_rates.tolist()
    position = {int(s): i for i, s in enumerate(active)}

    current = position[first]
    states, sojourns = [], []
    t = 0.0
    while True:
        tau = 0.0
        while tau <= 0.0:
            tau = -math.log1p(-stream.next()) / exit_rates[current]
        if t + tau >= duration:
            states.append(current)
            sojourns.append(duration - t)
            break
        states.append(current)
        sojourns.append(tau)
        t += tau
        current = _inverse_cdf(jump_cdf[current], stream.next())

    logger.info("simulated %d sojourns over %.1f s (seed %s)", len(states), duration, seed)
    return SojournSchedule(active[np.asarray(states)], sojourns, ss, seed)
