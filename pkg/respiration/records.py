from dataclasses import dataclass, field

import numpy as np

from errors import ConfigurationError, InvalidInputError


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RateBounds:
    """Admissible RR range [r_low, r_high] and the movement sentinel, in Hz."""

    r_low: float
    r_high: float
    r_movement: float

    def __post_init__(self):
        if not 0 < self.r_low < self.r_high < self.r_movement:
            raise ConfigurationError(
                f"bounds must satisfy 0 < R_L < R_H < R_M, got "
                f"{self.r_low}, {self.r_high}, {self.r_movement}"
            )


@dataclass(frozen=True)
class PneumogramRecord:
    samples: np.ndarray  # µV
    sample_rate: float  # Hz

    def __post_init__(self):
        samples = _frozen(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("pneumogram must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("pneumogram contains non-finite samples")
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise InvalidInputError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def sample_interval(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class WindowConfig:
    """Interlaced windows of `window_len` samples overlapping by `interlace`."""

    window_len: int
    interlace: int

    def __post_init__(self):
        if self.window_len < 4:
            raise ConfigurationError(f"window must hold at least 4 samples, got {self.window_len}")
        if not 0 <= self.interlace < self.window_len:
            raise ConfigurationError(
                f"interlace must lie in [0, {self.window_len}), got {self.interlace}"
            )

    @property
    def step(self) -> int:
        return self.window_len - self.interlace

    @classmethod
    def from_seconds(cls, window_s: float, overlap: float, sample_rate: float) -> "WindowConfig":
        window_len = int(round(window_s * sample_rate))
        return cls(window_len, int(round(overlap * window_len)))

    def n_windows(self, n_samples: int) -> int:
        if n_samples < self.window_len:
            return 0
        return (n_samples - self.window_len) // self.step + 1


@dataclass(frozen=True)
class RrTrajectory:
    """RR per window in Hz; window j is time-stamped at origin + j * step."""

    values: np.ndarray
    window_step_s: float
    origin_time_s: float = 0.0
    window_s: float | None = field(default=None, compare=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise InvalidInputError("trajectory values must be 1-D")
        if not self.window_step_s > 0:
            raise InvalidInputError(f"window step must be positive, got {self.window_step_s}")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.origin_time_s + self.window_step_s * np.arange(self.values.size)

    def __len__(self):
        return self.values.size
