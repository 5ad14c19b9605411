from dataclasses import dataclass

import numpy as np

from errors import InvalidInputError
from quantizer.state_space import StateSpace
from respiration.records import RrTrajectory


@dataclass(frozen=True)
class QuantizedTrajectory:
    state_indices: np.ndarray
    window_step_s: float
    state_space: StateSpace

    def __post_init__(self):
        indices = np.array(self.state_indices, dtype=np.int64)
        indices.setflags(write=False)
        object.__setattr__(self, "state_indices", indices)
        if indices.ndim != 1:
            raise InvalidInputError("state indices must be 1-D")
        if indices.size and (indices.min() < 0 or indices.max() >= self.state_space.n_states):
            raise InvalidInputError(f"state index outside 0..{self.state_space.n_states - 1}")
        if not self.window_step_s > 0:
            raise InvalidInputError(f"window step must be positive, got {self.window_step_s}")

    @property
    def rates(self) -> np.ndarray:
        return self.state_space.rates[self.state_indices]

    def __len__(self):
        return self.state_indices.size


def nearest_state(values, rates: np.ndarray) -> np.ndarray:
    """Index of the nearest rate; equal distances resolve to the lower index."""
    values = np.asarray(values, dtype=float)
    return np.argmin(np.abs(values[:, np.newaxis] - rates[np.newaxis, :]), axis=1)


def quantize(traj: RrTrajectory, ss: StateSpace) -> QuantizedTrajectory:
    return QuantizedTrajectory(nearest_state(traj.values, ss.rates), traj.window_step_s, ss)
