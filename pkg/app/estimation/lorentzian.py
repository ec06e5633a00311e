from __future__ import annotations

import logging
import math

import numpy as np

from app.core.errors import DegeneracyError, DetectionError, DomainError
from app.estimation.lm import FitData, ModelFunction, lm_fit
from app.estimation.results import FitResult, LorentzianParams
from app.physics.published import published
from app.simulator.records import SpectrumRecord
from app.simulator.spectrum import lorentzian_line

logger = logging.getLogger(__name__)

DETECTION_RATIO = 3.0
STAT_SIGMA = published("frequency_stat_sigma").value

LORENTZIAN_NAMES = ("center", "linewidth", "amplitude", "baseline")


def _line(freq: np.ndarray, p: np.ndarray) -> np.ndarray:
    return lorentzian_line(freq, p[0], p[1], p[2], p[3])


def _line_jacobian(freq: np.ndarray, p: np.ndarray) -> np.ndarray:
    center, linewidth, amplitude, _ = p
    half = 0.5 * linewidth
    offset = freq - center
    denom = offset**2 + half**2
    shape = half**2 / denom
    d_center = amplitude * half**2 * 2.0 * offset / denom**2
    d_linewidth = amplitude * half * offset**2 / denom**2
    return np.column_stack((d_center, d_linewidth, shape, np.ones_like(freq)))


LORENTZIAN_MODEL = ModelFunction(
    func=_line, n_params=4, jacobian=_line_jacobian, names=LORENTZIAN_NAMES
)


SMOOTHING_BINS = 5
MAX_WIDTH_FRACTION = 0.25


def _smoothed(power: np.ndarray) -> np.ndarray:
    kernel = np.full(SMOOTHING_BINS, 1.0 / SMOOTHING_BINS)
    padded = np.pad(power, SMOOTHING_BINS // 2, mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def _initial_guess(spectrum: SpectrumRecord, power: np.ndarray | None = None) -> np.ndarray:
    """Peak, half-maximum width and median baseline read off ``power``."""
    freq = spectrum.frequencies
    power = spectrum.power if power is None else power
    peak = int(np.argmax(power))
    baseline = float(np.median(power))
    amplitude = float(power[peak]) - baseline
    half_level = baseline + 0.5 * amplitude
    left = peak
    while left > 0 and power[left - 1] > half_level:
        left -= 1
    right = peak
    while right < power.size - 1 and power[right + 1] > half_level:
        right += 1
    width = max(float(freq[right] - freq[left]), spectrum.bin_width)
    return np.array([float(freq[peak]), width, amplitude, baseline])


def _starts(spectrum: SpectrumRecord) -> list[np.ndarray]:
    smooth = _initial_guess(spectrum, _smoothed(spectrum.power))
    raw = _initial_guess(spectrum)
    return [smooth, np.array([raw[0], smooth[1], smooth[2], smooth[3]]), raw]


def _acceptable(fit: FitResult, spectrum: SpectrumRecord) -> bool:
    center, linewidth, amplitude, _ = fit.parameters
    freq = spectrum.frequencies
    span = float(freq[-1] - freq[0])
    return (
        fit.converged
        and freq[0] < center < freq[-1]
        and spectrum.bin_width <= abs(linewidth) <= MAX_WIDTH_FRACTION * span
        and amplitude > 0
    )


def fit_lorentzian(
    spectrum: SpectrumRecord,
    *,
    stat_sigma: float = STAT_SIGMA,
) -> tuple[LorentzianParams, FitResult]:
    """Resonance center and linewidth from an analyzer spectrum.

    The fit is unweighted and its covariance is rescaled by chi2/dof. It is
    started from the smoothed and the raw peak; the lowest-chi2 fit whose
    width lies between one bin and a quarter of the span wins. The reported
    center uncertainty adds the fixed statistical term in quadrature.
    """
    power = spectrum.power
    median = float(np.median(power))
    peak = float(np.max(power))
    if not peak > DETECTION_RATIO * median:
        raise DetectionError(
            f"no resolvable resonance: peak {peak:.3g} is below {DETECTION_RATIO:g}x "
            f"the median {median:.3g}"
        )

    data = FitData.of(spectrum.frequencies, power)
    fit = None
    for start in _starts(spectrum):
        try:
            candidate = lm_fit(LORENTZIAN_MODEL, data, start)
        except (DegeneracyError, DomainError) as exc:
            logger.debug("Lorentzian start rejected | start=%s error=%s", start.tolist(), exc)
            continue
        if _acceptable(candidate, spectrum) and (fit is None or candidate.chi2 < fit.chi2):
            fit = candidate
    if fit is None:
        raise DegeneracyError(
            "no Lorentzian start converged to a line between one bin and a quarter of the span wide"
        )
    fit = fit.with_covariance_scaled(fit.chi2 / fit.dof)

    center, linewidth, amplitude, baseline = fit.parameters
    errors = fit.errors
    params = LorentzianParams(
        center=center,
        linewidth=abs(linewidth),
        amplitude=max(amplitude, 0.0),
        baseline=baseline,
        sigma_center=math.hypot(float(errors[0]), stat_sigma),
        sigma_linewidth=float(errors[1]),
    )
    logger.debug(
        "Lorentzian fitted | center=%s linewidth=%s sigma_center=%s iterations=%s",
        params.center,
        params.linewidth,
        params.sigma_center,
        fit.iterations,
    )
    return params, fit
