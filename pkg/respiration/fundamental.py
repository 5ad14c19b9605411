"""Approximate ML fundamental-frequency and amplitude estimation on a
window of pneumogram samples (periodogram peak picking)."""

import numpy as np

from errors import InvalidBandError, InvalidInputError


def band_bins(window_len: int, sample_rate: float, band: tuple[float, float]) -> np.ndarray:
    """DFT bin indices whose physical frequency lies in the closed band."""
    f_lo, f_hi = band
    if not 0 < f_lo < f_hi <= sample_rate / 2 + 1e-12:
        raise InvalidBandError(
            f"band must satisfy 0 < f_lo < f_hi <= f_s/2, got [{f_lo}, {f_hi}] at f_s={sample_rate}"
        )
    k_lo = int(np.ceil(f_lo * window_len / sample_rate - 1e-9))
    k_hi = int(np.floor(f_hi * window_len / sample_rate + 1e-9))
    k_hi = min(k_hi, window_len // 2)
    if k_hi < k_lo:
        raise InvalidBandError(
            f"no DFT bin of a {window_len}-sample window falls in [{f_lo}, {f_hi}] Hz"
        )
    return np.arange(k_lo, k_hi + 1)


def spectral_peaks(windows: np.ndarray, sample_rate: float, band: tuple[float, float]):
    """Peak frequency and amplitude for every row of `windows`.

    Rows are mean-removed before the DFT; the argmax over in-band bins
    breaks ties to the lowest bin.
    """
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    window_len = windows.shape[1]
    bins = band_bins(window_len, sample_rate, band)
    centered = windows - windows.mean(axis=1, keepdims=True)
    spectrum = np.fft.rfft(centered, axis=1)[:, bins]
    power = np.abs(spectrum) ** 2
    peak = np.argmax(power, axis=1)
    rows = np.arange(windows.shape[0])
    freqs = sample_rate * bins[peak] / window_len
    # the Nyquist bin has no mirror image
    scale = np.where(2 * bins[peak] == window_len, 1.0, 2.0)
    amps = scale / window_len * np.abs(spectrum[rows, peak])
    return freqs, amps


def estimate_fundamental(window, sample_rate: float, band: tuple[float, float]) -> tuple[float, float]:
    window = np.asarray(window, dtype=float)
    if window.ndim != 1 or window.size < 4:
        raise InvalidInputError(f"window must be 1-D with at least 4 samples, got shape {window.shape}")
    if not np.all(np.isfinite(window)):
        raise InvalidInputError("window contains non-finite samples")
    freqs, amps = spectral_peaks(window[np.newaxis, :], sample_rate, band)
    return float(freqs[0]), float(amps[0])


def detect_movement(window, eta: float) -> bool:
    """True when any sample magnitude exceeds the movement threshold eta (µV)."""
    if not eta > 0:
        raise InvalidInputError(f"movement threshold must be positive, got {eta}")
    return bool(np.any(np.abs(np.asarray(window, dtype=float)) > eta))
