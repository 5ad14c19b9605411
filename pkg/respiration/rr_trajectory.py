import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import InsufficientDataError, InvalidInputError
from respiration.fundamental import spectral_peaks
from respiration.records import PneumogramRecord, RateBounds, RrTrajectory, WindowConfig

logger = logging.getLogger(__name__)

AMP_THRESHOLD_FRACTION = 0.1


@dataclass(frozen=True)
class WindowAnalysis:
    """Per-window peak frequency, amplitude and movement flag."""

    freqs: np.ndarray
    amps: np.ndarray
    movement: np.ndarray
    window_step_s: float
    origin_time_s: float
    window_s: float

    def median_breathing_amplitude(self) -> float:
        still = self.amps[~self.movement]
        return float(np.median(still)) if still.size else 0.0


def interlaced_windows(record: PneumogramRecord, cfg: WindowConfig) -> np.ndarray:
    """Read-only (n_windows, M) view; the trailing partial window is dropped."""
    n = cfg.n_windows(len(record))
    if n == 0:
        raise InsufficientDataError(
            f"record has {len(record)} samples, fewer than one {cfg.window_len}-sample window"
        )
    return sliding_window_view(record.samples, cfg.window_len)[:: cfg.step][:n]


def analyze_windows(record: PneumogramRecord, cfg: WindowConfig, eta: float, bounds: RateBounds) -> WindowAnalysis:
    if not eta > 0:
        raise InvalidInputError(f"movement threshold must be positive, got {eta}")
    windows = interlaced_windows(record, cfg)
    band = (bounds.r_low, min(bounds.r_high, record.sample_rate / 2))
    freqs, amps = spectral_peaks(windows, record.sample_rate, band)
    movement = np.any(np.abs(windows) > eta, axis=1)
    ts = record.sample_interval
    return WindowAnalysis(
        freqs=freqs,
        amps=amps,
        movement=movement,
        window_step_s=cfg.step * ts,
        origin_time_s=cfg.window_len * ts / 2,
        window_s=cfg.window_len * ts,
    )


def default_amp_threshold(analysis: WindowAnalysis) -> float:
    # the floor keeps all-zero windows on the apnea side of the gate
    return max(AMP_THRESHOLD_FRACTION * analysis.median_breathing_amplitude(), np.finfo(float).tiny)


def estimate_rr_trajectory(
    record: PneumogramRecord,
    cfg: WindowConfig,
    eta: float,
    bounds: RateBounds,
    amp_threshold: float | None = None,
) -> RrTrajectory:
    """RR per interlaced window: R_M on movement, 0 on apnea, else the peak frequency."""
    analysis = analyze_windows(record, cfg, eta, bounds)
    if amp_threshold is None:
        amp_threshold = default_amp_threshold(analysis)
    apnea = (analysis.freqs < bounds.r_low) | (analysis.amps < amp_threshold)
    values = np.where(analysis.movement, bounds.r_movement, np.where(apnea, 0.0, analysis.freqs))
    logger.info(
        "estimated %d windows: %d movement, %d apnea (amp threshold %.4g)",
        values.size,
        int(analysis.movement.sum()),
        int((apnea & ~analysis.movement).sum()),
        amp_threshold,
    )
    return RrTrajectory(
        values=values,
        window_step_s=analysis.window_step_s,
        origin_time_s=analysis.origin_time_s,
        window_s=analysis.window_s,
    )
