from __future__ import annotations

import logging
import math

import numpy as np

from app.core.errors import ConfigurationError, DomainError
from app.simulator.config import NoiseConfig
from app.simulator.records import SpectrumRecord

logger = logging.getLogger(__name__)


def lorentzian_line(
    frequencies: np.ndarray,
    center: float,
    linewidth: float,
    amplitude: float,
    baseline: float = 0.0,
) -> np.ndarray:
    """A (gamma/2)^2 / ((nu - nu_r)^2 + (gamma/2)^2) + baseline."""
    half = 0.5 * linewidth
    return amplitude * half * half / ((frequencies - center) ** 2 + half * half) + baseline


def analyzer_bins(center: float, noise: NoiseConfig) -> np.ndarray:
    """FFT-analyzer bin frequencies (multiples of the resolution bandwidth) around a line."""
    width = noise.resolution_bandwidth
    first = max(0, int(round(center / width)) - noise.spectrum_bins // 2)
    return (first + np.arange(noise.spectrum_bins)) * width


def synthesize_spectrum(
    true_freq: float,
    linewidth: float,
    noise: NoiseConfig,
    timestamp: float = 0.0,
    *,
    frequencies: np.ndarray | None = None,
) -> SpectrumRecord:
    """Averaged analyzer spectrum of a driven resonance on an exponential noise floor."""
    if not linewidth > 0:
        raise DomainError(f"linewidth must be positive, got {linewidth!r}")
    if frequencies is None:
        frequencies = analyzer_bins(true_freq, noise)
    frequencies = np.asarray(frequencies, dtype=float)
    if frequencies.size < 2 or not frequencies[0] < true_freq < frequencies[-1]:
        raise ConfigurationError(
            f"analyzer bins [{frequencies[0] if frequencies.size else math.nan!r}, "
            f"{frequencies[-1] if frequencies.size else math.nan!r}] Hz miss the line at {true_freq!r} Hz"
        )

    power = lorentzian_line(frequencies, true_freq, linewidth, noise.spectrum_peak_power)
    rng = np.random.default_rng(noise.rng_seed)
    draws = rng.exponential(1.0, size=(noise.rms_averages, frequencies.size)).mean(axis=0)
    if noise.inject_noise and noise.spectrum_noise_floor > 0:
        power = power + noise.spectrum_noise_floor * draws

    return SpectrumRecord(
        frequencies=frequencies,
        power=power,
        bin_width=noise.resolution_bandwidth,
        timestamp=timestamp,
    )


def jittered_center(true_freq: float, noise: NoiseConfig) -> float:
    """Resonance frequency of one acquisition: the true line moved by the statistical scatter.

    Drawn from its own stream so the analyzer noise of a seed is unchanged.
    """
    if not noise.inject_noise:
        return true_freq
    rng = np.random.default_rng([noise.rng_seed, 1])
    return true_freq + noise.frequency_stat_sigma * float(rng.standard_normal())
