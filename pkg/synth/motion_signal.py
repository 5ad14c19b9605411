import logging

import numpy as np

from ctmc.simulate import SojournSchedule
from errors import InvalidInputError, UnsupportedStateError
from quantizer.state_space import StateSpace
from respiration.records import PneumogramRecord

logger = logging.getLogger(__name__)


def synth_motion_signal(
    schedule: SojournSchedule,
    ss: StateSpace,
    sample_rate: float,
    amplitude: float,
    apnea_rate: float | None = None,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> PneumogramRecord:
    """Chest-motion cosine whose instantaneous frequency follows the schedule.

    The phase accumulates continuously across sojourns. Apnea sojourns are
    flat unless `apnea_rate` is given, in which case they breathe at that
    slow rate with the full amplitude.
    """
    if len(schedule) == 0:
        raise InvalidInputError("schedule holds no sojourns")
    if ss.has_movement and np.any(schedule.states == ss.movement_index):
        raise UnsupportedStateError("the movement state has no breathing waveform; strip it first")
    visited = schedule.rates
    top = max(float(visited.max()), apnea_rate or 0.0)
    if not sample_rate > 2 * top:
        raise InvalidInputError(f"sample rate {sample_rate} Hz cannot carry {top} Hz breathing")
    if noise_sigma < 0:
        raise InvalidInputError(f"noise sigma must be non-negative, got {noise_sigma}")

    n = int(np.floor(schedule.duration * sample_rate + 0.5))
    t = np.arange(n) / sample_rate
    states = schedule.state_at(t)
    freq = ss.rates[states].astype(float)
    amp = np.full(n, float(amplitude))
    if ss.has_apnea:
        in_apnea = states == ss.apnea_index
        if apnea_rate is None:
            amp[in_apnea] = 0.0
        else:
            freq[in_apnea] = apnea_rate

    phase = 2 * np.pi * np.concatenate(([0.0], np.cumsum(freq[:-1]))) / sample_rate
    samples = amp * np.cos(phase)
    if noise_sigma > 0:
        samples += np.random.default_rng(seed).normal(0.0, noise_sigma, n)
    logger.debug("synthesised %d samples at %.1f Hz", n, sample_rate)
    return PneumogramRecord(samples, sample_rate)
