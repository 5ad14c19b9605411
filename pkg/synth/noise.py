"""High-pass compensation noise for stretched blocks.

Two identical first-order Butterworth high-pass sections in cascade form a
critically damped second-order filter. Each section's cutoff is pulled down
so the cascade's -3 dB point lands on the requested cutoff.
"""

import math

import numpy as np
from scipy.signal import butter, sosfilt

from errors import InvalidCutoffError

_IMPULSE_LEN = 8192


def highpass_sos(cutoff: float, frame_rate: float) -> np.ndarray:
    if not 0 < cutoff < frame_rate / 2:
        raise InvalidCutoffError(f"cutoff must lie in (0, {frame_rate / 2}) Hz, got {cutoff}")
    warped = math.tan(math.pi * cutoff / frame_rate) * math.sqrt(math.sqrt(2.0) - 1.0)
    section_cutoff = frame_rate * math.atan(warped) / math.pi
    section = butter(1, section_cutoff, btype="highpass", fs=frame_rate, output="sos")
    return np.vstack([section, section])


def power_gain(sos: np.ndarray) -> float:
    """Output variance of the filter for unit-variance white input."""
    impulse = np.zeros(_IMPULSE_LEN)
    impulse[0] = 1.0
    return float(np.sum(sosfilt(sos, impulse) ** 2))


def white_noise(length: int, variance: float, stream_seed) -> np.ndarray:
    rng = np.random.default_rng(stream_seed)
    return rng.standard_normal(length) * math.sqrt(variance)


def compensation_noise(
    length: int,
    variance: float,
    cutoff: float,
    frame_rate: float,
    stream_seed,
) -> np.ndarray:
    """Seeded white Gaussian noise of the given variance through the high-pass.

    Filter state starts at rest on every call.
    """
    sos = highpass_sos(cutoff, frame_rate)
    if variance <= 0:
        return np.zeros(length)
    return sosfilt(sos, white_noise(length, variance, stream_seed))


def pixel_noise_field(
    length: int,
    n_pixels: int,
    variance: float,
    cutoff: float,
    frame_rate: float,
    seed: int,
    block: int,
) -> np.ndarray:
    """(length, n_pixels) noise; pixel p draws from stream [seed, block, p],
    so column p equals compensation_noise(..., stream_seed=[seed, block, p])."""
    sos = highpass_sos(cutoff, frame_rate)
    if variance <= 0:
        return np.zeros((length, n_pixels))
    white = np.column_stack([white_noise(length, variance, [seed, block, p]) for p in range(n_pixels)])
    return sosfilt(sos, white, axis=0)
