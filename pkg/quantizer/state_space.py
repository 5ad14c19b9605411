import logging
from dataclasses import dataclass

import numpy as np

import config
from errors import ConfigurationError
from quantizer.lloyd_max import lloyd_max
from respiration.records import RateBounds, RrTrajectory

logger = logging.getLogger(__name__)


def default_movement_rate(r_high: float) -> float:
    return max(config.MOVEMENT_RATE_HZ, config.MOVEMENT_RATIO * r_high)


def check_movement_rate(bounds: RateBounds) -> None:
    """A movement rate chosen for new models has to dwarf the breathing range."""
    if bounds.r_movement < config.MOVEMENT_RATIO * bounds.r_high:
        raise ConfigurationError(
            f"R_M={bounds.r_movement} must be at least {config.MOVEMENT_RATIO:g} x R_H={bounds.r_high}"
        )


def preset_bounds(name: str = "newborn", r_movement: float | None = None) -> RateBounds:
    try:
        preset = config.PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}, choose from {sorted(config.PRESETS)}") from None
    if r_movement is None:
        r_movement = default_movement_rate(preset["r_high"])
    return RateBounds(preset["r_low"], preset["r_high"], r_movement)


@dataclass(frozen=True)
class StateSpace:
    """Ordered model rates in Hz. State 0 is apnea (rate 0) when `has_apnea`;
    the last state is movement (rate R_M) when `has_movement`. Here R_M only
    has to exceed R_H; `check_movement_rate` holds new models to more."""

    rates: np.ndarray
    has_apnea: bool
    has_movement: bool
    bounds: RateBounds

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        if rates.ndim != 1 or rates.size < 1:
            raise ConfigurationError("state space needs at least one rate")
        if np.any(np.diff(rates) <= 0):
            raise ConfigurationError(f"rates must be strictly increasing, got {rates.tolist()}")
        if self.has_apnea and rates[0] != 0:
            raise ConfigurationError("apnea state must have rate 0")
        if self.has_movement and rates[-1] != self.bounds.r_movement:
            raise ConfigurationError("movement state must have rate R_M")
        free = rates[self.free_slice]
        tol = 1e-12
        if np.any((free < self.bounds.r_low - tol) | (free > self.bounds.r_high + tol)):
            raise ConfigurationError(
                f"breathing rates {free.tolist()} leave [{self.bounds.r_low}, {self.bounds.r_high}]"
            )

    @property
    def n_states(self) -> int:
        return self.rates.size

    @property
    def free_slice(self) -> slice:
        return slice(1 if self.has_apnea else 0, self.rates.size - 1 if self.has_movement else self.rates.size)

    @property
    def apnea_index(self) -> int | None:
        return 0 if self.has_apnea else None

    @property
    def movement_index(self) -> int | None:
        return self.rates.size - 1 if self.has_movement else None

    def without_movement(self) -> "StateSpace":
        return StateSpace(self.rates[:-1], self.has_apnea, False, self.bounds)


def build_state_space(
    traj: RrTrajectory,
    n_states: int,
    include_apnea: bool,
    include_movement: bool,
    bounds: RateBounds | None = None,
) -> StateSpace:
    """Reserve apnea/movement states per the flags and place the remaining
    levels by Lloyd-Max over the in-range trajectory values."""
    bounds = bounds or preset_bounds()
    if include_movement:
        check_movement_rate(bounds)
    n_free = n_states - int(include_apnea) - int(include_movement)
    if n_states < 2 or n_free < 1:
        raise ConfigurationError(
            f"N={n_states} cannot host the reserved states plus one breathing level"
        )
    values = traj.values
    breathing = values[(values != 0) & (values != bounds.r_movement)]
    # estimates slightly outside the range are clamped onto it
    breathing = np.clip(breathing, bounds.r_low, bounds.r_high)
    levels = lloyd_max(breathing, n_free)
    rates = list(levels)
    if include_apnea:
        rates.insert(0, 0.0)
    if include_movement:
        rates.append(bounds.r_movement)
    logger.info("state space: %s", ", ".join(f"{r:.4g}" for r in rates))
    return StateSpace(np.asarray(rates), include_apnea, include_movement, bounds)
