"""Temporal warping of a source video so its breathing follows a schedule.

A source breathing at rate_video is re-timed block by block: a sojourn of
tau seconds in state n takes ceil(tau * rbar_n * f_r) source frames and
resamples them to round(tau * f_r) output frames, so the breathing
frequency is multiplied by rbar_n = rate_n / rate_video.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ctmc.simulate import SojournSchedule
from errors import ConfigurationError, ConsistencyError, EmptyPlanError, InvalidInputError, MustStripError
from quantizer.state_space import StateSpace
from synth.frames import FrameSequence, Region, estimate_noise_variance
from synth.noise import highpass_sos, pixel_noise_field, power_gain

logger = logging.getLogger(__name__)

_RETENTION_FRAMES = 64
_CEIL_SLACK = 1e-9


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def normalize_rates(ss: StateSpace, rate_video: float, apnea_rate: float | None = None) -> np.ndarray:
    """rate_n / rate_video, with the apnea state replaced by a slow
    apnea_rate so its block still has a finite source length."""
    if ss.has_movement:
        raise MustStripError("strip the movement state before normalising rates")
    if not (np.isfinite(rate_video) and rate_video > 0):
        raise InvalidInputError(f"video breathing rate must be positive, got {rate_video}")
    normalized = ss.rates / rate_video
    if ss.has_apnea:
        if apnea_rate is None or not 0 < apnea_rate < ss.bounds.r_low:
            raise InvalidInputError(
                f"apnea rate must lie in (0, {ss.bounds.r_low}) Hz, got {apnea_rate}"
            )
        normalized[ss.apnea_index] = apnea_rate / rate_video
    return normalized


@dataclass(frozen=True)
class WarpBlock:
    state: int
    rate: float  # normalised
    frames_out: int
    source_start: int
    source_frames: int

    @property
    def stretch(self) -> float:
        return self.frames_out / self.source_frames


@dataclass(frozen=True)
class WarpPlan:
    blocks: tuple[WarpBlock, ...]
    frame_rate: float
    source_len: int
    scale: float = 1.0  # C_V applied to the normalised rates

    @property
    def total_frames(self) -> int:
        return sum(b.frames_out for b in self.blocks)


def plan_warp(
    schedule: SojournSchedule,
    normalized_rates,
    frame_rate: float,
    source_len: int,
    exit_rates=None,
    scale_to_dominant: bool = False,
) -> WarpPlan:
    if len(schedule) == 0:
        raise EmptyPlanError("schedule holds no sojourns")
    if not frame_rate > 0 or source_len < 1:
        raise InvalidInputError("frame rate and source length must be positive")
    rates = np.asarray(normalized_rates, dtype=float)
    if rates.shape != (schedule.state_space.n_states,) or np.any(~(rates > 0)):
        raise InvalidInputError("need one positive normalised rate per state")

    scale = 1.0
    if scale_to_dominant:
        if exit_rates is None:
            raise ConfigurationError("scaling to the dominant state needs the generator's exit rates")
        mu = np.asarray(exit_rates, dtype=float)
        candidates = np.flatnonzero(mu > 0)
        dominant = int(candidates[np.argmin(mu[candidates])])
        scale = 1.0 / rates[dominant]
        rates = rates * scale
        rates[dominant] = 1.0
        logger.info("C_V = %.4f puts state %d at the native rate", scale, dominant)

    blocks = []
    for state, tau, start in zip(schedule.states, schedule.sojourns, schedule.start_times):
        rate = float(rates[state])
        frames_out = max(1, _round_half_up(tau * frame_rate))
        if rate == 1.0:
            source_frames = frames_out
        else:
            exact = tau * rate * frame_rate
            source_frames = max(1, math.ceil(exact - _CEIL_SLACK * max(1.0, exact)))
        source_start = _round_half_up(start * frame_rate) % source_len
        if source_start + source_frames > source_len:
            source_start = 0
        blocks.append(WarpBlock(int(state), rate, frames_out, source_start, source_frames))
    return WarpPlan(tuple(blocks), float(frame_rate), int(source_len), scale)


@dataclass(frozen=True)
class NoiseOptions:
    enabled: bool = True
    region: Region | None = None
    variance: float | None = None  # overrides the estimate from `region`


def _sample_positions(source_frames: int, frames_out: int) -> np.ndarray:
    return np.linspace(0.0, source_frames - 1, frames_out)


def spline_variance_retention(source_frames: int, frames_out: int) -> float:
    """Fraction of white-noise variance the spline resampling keeps, from the
    squared interpolation weights; measured on at most 64 source frames."""
    if source_frames < 2:
        return 0.0
    head = min(source_frames, _RETENTION_FRAMES)
    head_out = max(2, _round_half_up(head * frames_out / source_frames))
    weights = CubicSpline(np.arange(head), np.eye(head), bc_type="natural")(_sample_positions(head, head_out))
    return float(np.mean(np.sum(weights**2, axis=1)))


def _resample(block: np.ndarray, frames_out: int) -> np.ndarray:
    if block.shape[0] < 2:
        return np.repeat(block, frames_out, axis=0)
    spline = CubicSpline(np.arange(block.shape[0]), block, axis=0, bc_type="natural")
    return spline(_sample_positions(block.shape[0], frames_out))


def warp_frames(src: FrameSequence, plan: WarpPlan, noise: NoiseOptions = NoiseOptions(), seed: int = 0) -> FrameSequence:
    if plan.source_len != src.n_frames or plan.frame_rate != src.frame_rate:
        raise ConsistencyError(
            f"plan built for {plan.source_len} frames at {plan.frame_rate} fps, "
            f"source has {src.n_frames} at {src.frame_rate}"
        )
    variance = 0.0
    if noise.enabled:
        variance = noise.variance if noise.variance is not None else estimate_noise_variance(src, noise.region)
        logger.info("source noise variance %.3g", variance)

    n_pixels = src.height * src.width
    out = np.empty((plan.total_frames, src.height, src.width), dtype=np.float32)
    pos = 0
    for index, block in enumerate(plan.blocks):
        rows = (block.source_start + np.arange(block.source_frames)) % src.n_frames
        if block.rate == 1.0:
            segment = src.frames[rows]
        else:
            segment = _resample(src.frames[rows].astype(np.float64), block.frames_out)
            if block.rate < 1.0 and variance > 0 and block.frames_out > block.source_frames:
                cutoff = src.frame_rate / (2.0 * block.stretch)
                lost = variance * (1.0 - spline_variance_retention(block.source_frames, block.frames_out))
                compensation = pixel_noise_field(
                    block.frames_out,
                    n_pixels,
                    lost / power_gain(highpass_sos(cutoff, src.frame_rate)),
                    cutoff,
                    src.frame_rate,
                    seed,
                    index,
                )
                segment = segment + compensation.reshape(segment.shape)
        out[pos : pos + block.frames_out] = np.clip(segment, 0.0, 1.0)
        pos += block.frames_out

    logger.info("warped %d source frames into %d output frames", src.n_frames, plan.total_frames)
    return FrameSequence(out, src.frame_rate)
