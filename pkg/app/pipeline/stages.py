"""The measurement stages, in the order a campaign runs them.

Each stage reads only the campaign config and the records handed to it.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np

from app.core.errors import ConfigurationError, ContactError, GeometryError
from app.estimation.calibration import fit_calibration_global, require_converged
from app.estimation.casimir import fit_casimir, fit_free_exponent, fit_wedge_deviation
from app.estimation.drift import fit_with_drift
from app.estimation.lm import FitData, ModelFunction, lm_fit
from app.estimation.lorentzian import fit_lorentzian
from app.estimation.propagation import subtract_electrostatic
from app.physics.apparatus import WedgeGeometry
from app.physics.models import effective_mass_from_deflection
from app.physics.params import CalibrationParams
from app.pipeline.campaign import (
    CampaignConfig,
    ExtractionOutcome,
    OffsetOutcome,
    ParallelizationOutcome,
    ResonanceOutcome,
)
from app.simulator.capacitance import contact_limited_capacitance, quantize
from app.simulator.config import ScanPlan
from app.simulator.deflection import run_deflection_sweep
from app.simulator.records import MeasurementRun
from app.simulator.scan import run_gap_scan
from app.simulator.spectrum import jittered_center, synthesize_spectrum

logger = logging.getLogger(__name__)

CALIBRATION_CHI2_BAND = (0.01, 0.99)


def stage_parallelize(config: CampaignConfig) -> ParallelizationOutcome:
    """Coordinate ascent on the bridge capacitance over the two tilt axes."""
    cfg = config.apparatus
    settings = config.parallelization

    def reading(tilt: tuple[float, float]) -> float:
        value = contact_limited_capacitance(cfg, tilt[0], tilt[1], settings.min_gap)
        return quantize(value, cfg.bridge_resolution) if settings.quantized else value

    tilt = settings.start_tilt
    current = reading(tilt)
    trace = [(tilt[0], tilt[1], current)]
    step = settings.initial_step
    moves = 0
    aborted = False

    while step >= settings.min_step and moves < settings.max_moves:
        improved = False
        for axis in (0, 1):
            for direction in (1.0, -1.0):
                candidate = list(tilt)
                candidate[axis] += direction * step
                candidate = (candidate[0], candidate[1])
                try:
                    value = reading(candidate)
                except ContactError:
                    logger.warning(
                        "Parallelization aborted on contact | tilt=%s last_safe=%s",
                        candidate,
                        tilt,
                    )
                    aborted = True
                    break
                if value > current:
                    tilt, current = candidate, value
                    trace.append((tilt[0], tilt[1], current))
                    moves += 1
                    improved = True
                    break
            if aborted or improved:
                break
        if aborted:
            break
        if not improved:
            step *= 0.5

    outcome = ParallelizationOutcome(
        tilt_x=tilt[0],
        tilt_y=tilt[1],
        capacitance=current,
        flat_capacitance=contact_limited_capacitance(cfg, 0.0, 0.0, settings.min_gap),
        moves=moves,
        aborted=aborted,
        trace=tuple(trace),
    )
    logger.info(
        "Parallelization done | tilt=(%s, %s) capacitance=%s moves=%s aborted=%s",
        outcome.tilt_x,
        outcome.tilt_y,
        outcome.capacitance,
        moves,
        aborted,
    )
    return outcome


def _parabola(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] * (v - p[1]) ** 2 + p[2]


def _parabola_jacobian(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.column_stack(((v - p[1]) ** 2, -2.0 * p[0] * (v - p[1]), np.ones_like(v)))


PARABOLA_MODEL = ModelFunction(
    func=_parabola, n_params=3, jacobian=_parabola_jacobian, names=("curvature", "v0", "level")
)


def fit_deflection_parabola(
    biases: np.ndarray, readings: np.ndarray, sigma: float
) -> tuple[float, float, float, float]:
    """(curvature, vertex, sigma_curvature, sigma_vertex) of K (V - V0)^2 + c.

    Fitted through the alternation-corrected readings.
    """
    a, b, c = np.polyfit(biases, readings, 2)
    if not a > 0:
        raise GeometryError(f"deflection parabola opens downward (curvature {a!r})")
    vertex = -b / (2.0 * a)
    start = np.array([a, vertex, c - a * vertex**2])
    fit = require_converged(
        lm_fit(PARABOLA_MODEL, FitData.of(biases, readings, sigma), start), "deflection parabola"
    )
    curvature, v0, _ = fit.parameters
    if not curvature > 0:
        raise GeometryError(f"deflection parabola opens downward (curvature {curvature!r})")
    return curvature, v0, fit.sigma("curvature"), fit.sigma("v0")


def _weighted_mean(values: np.ndarray, sigmas: np.ndarray) -> tuple[float, float]:
    """Inverse-variance mean with the uncertainty taken from the weighted scatter."""
    if not np.all(sigmas > 0):
        return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(values.size))
    weights = 1.0 / sigmas**2
    mean = float(np.sum(weights * values) / np.sum(weights))
    scatter = float(np.sum(weights * (values - mean) ** 2) / ((values.size - 1) * np.sum(weights)))
    return mean, math.sqrt(scatter)


def stage_offset_voltage(config: CampaignConfig, seed: int) -> OffsetOutcome:
    """V0 and m_eff from the static-deflection parabolas at several gaps.

    Both are inverse-variance averages over the gaps, so the stiff near
    parabolas dominate.
    """
    cfg = config.apparatus
    noise = config.noise.with_seed(seed)
    sweep = run_deflection_sweep(cfg, config.deflection_gaps, config.deflection_biases, noise)

    # bias reading minus the bracketing zeros: read noise x1.5, one half random-walk step
    spread = math.sqrt(1.5 * noise.deflection_noise**2 + 0.5 * noise.laser_drift_step**2)
    sigma = spread / sweep.sensitivity if noise.inject_noise and spread > 0 else 1.0

    differences = sweep.alternation_differences()
    vertices, vertex_sigmas, coefficients, masses, mass_sigmas = [], [], [], [], []
    for index, distance in enumerate(sweep.distances):
        curvature, v0, sigma_curvature, sigma_vertex = fit_deflection_parabola(
            sweep.biases, differences[index], sigma
        )
        k_i = curvature * sweep.sensitivity
        mass = effective_mass_from_deflection(k_i, float(distance), cfg)
        vertices.append(v0)
        vertex_sigmas.append(sigma_vertex)
        coefficients.append(k_i)
        masses.append(mass)
        mass_sigmas.append(mass * sigma_curvature / curvature)

    vertices_arr = np.asarray(vertices)
    v0, sigma_v0 = _weighted_mean(vertices_arr, np.asarray(vertex_sigmas))
    mass, sigma_mass = _weighted_mean(np.asarray(masses), np.asarray(mass_sigmas))
    outcome = OffsetOutcome(
        v0=v0,
        sigma_v0=sigma_v0,
        v0_per_distance=tuple(float(v) for v in vertices_arr),
        deflection_coefficients=tuple(float(k) for k in coefficients),
        effective_mass=mass,
        sigma_effective_mass=sigma_mass,
        effective_mass_ratio=mass / cfg.physical_mass,
        sigma_effective_mass_ratio=sigma_mass / cfg.physical_mass,
    )
    logger.info(
        "Offset voltage estimated | v0=%s sigma=%s m_eff_ratio=%s",
        outcome.v0,
        outcome.sigma_v0,
        outcome.effective_mass_ratio,
    )
    return outcome


def simulate_calibration_runs(config: CampaignConfig, seeds: dict[str, int]) -> list[MeasurementRun]:
    cfg = config.apparatus
    runs = []
    for index, bias in enumerate(config.calibration_biases):
        plan = ScanPlan.for_gaps(
            cfg,
            config.calibration_gaps,
            bias,
            dwell_time=config.dwell_time,
            casimir_on=config.casimir_on,
        )
        runs.append(
            run_gap_scan(
                cfg,
                plan,
                config.noise.with_seed(seeds[f"calibration_{index}"]),
                config.drift,
                config.casimir_on,
                label=f"calibration_{index}",
                role="calibration",
                config_hash=config.config_hash(),
            )
        )
    return runs


def simulate_casimir_run(config: CampaignConfig, seed: int, bias: float) -> MeasurementRun:
    cfg = config.apparatus
    plan = ScanPlan.stepped(
        cfg,
        config.scan_near,
        config.scan_far,
        bias,
        step_v=config.scan_step_v,
        dwell_time=config.dwell_time,
        casimir_on=config.casimir_on,
    )
    geometry = WedgeGeometry(
        tilt_theta=config.scan_tilt, plate_width=cfg.plate_width, plate_length=cfg.plate_length
    )
    return run_gap_scan(
        cfg,
        plan,
        config.noise.with_seed(seed),
        config.drift,
        config.casimir_on,
        label="casimir",
        role="casimir",
        config_hash=config.config_hash(),
        geometry=geometry,
    )


def stage_calibrate(
    config: CampaignConfig,
    v0_estimate: float,
    runs: Sequence[MeasurementRun],
) -> CalibrationParams:
    """Global electrostatic calibration of the large-bias runs."""
    if len(runs) != 3:
        raise ConfigurationError(f"calibration expects three large-bias runs, got {len(runs)}")
    cal = fit_calibration_global(
        runs, config.apparatus, v0_guess=v0_estimate, shared_offset=config.shared_offset
    )
    low, high = CALIBRATION_CHI2_BAND
    if not low <= (cal.chi2_probability or 0.0) <= high:
        logger.warning(
            "Calibration chi2 probability outside the accepted band | p=%s band=%s",
            cal.chi2_probability,
            CALIBRATION_CHI2_BAND,
        )
    return cal


def stage_extract_casimir(
    config: CampaignConfig,
    cal: CalibrationParams,
    casimir_run: MeasurementRun,
    calibration_runs: Sequence[MeasurementRun],
) -> ExtractionOutcome:
    """Electrostatic subtraction, Casimir fit and its cross-checks on the near-cancellation run."""
    cfg = config.apparatus
    residuals = subtract_electrostatic(casimir_run, cal, cfg)
    casimir = fit_casimir(residuals, config.casimir_points, propagation=config.propagation)
    n_points = casimir.params.n_points
    exponent = fit_free_exponent(residuals, n_points, propagation=config.propagation)
    wedge = fit_wedge_deviation(residuals, n_points, propagation=config.propagation)
    drift_cal, drift_casimir, drift = fit_with_drift(
        [*calibration_runs, casimir_run], cfg, v0_guess=cal.v0
    )
    return ExtractionOutcome(
        cancel_bias=casimir_run.bias,
        casimir=casimir,
        exponent=exponent,
        wedge=wedge,
        drift_calibration=drift_cal,
        drift_casimir=drift_casimir,
        drift=drift,
    )


def stage_resonance(config: CampaignConfig, seed: int) -> ResonanceOutcome:
    """Free-resonance frequency and linewidth from a synthesized analyzer spectrum."""
    cfg = config.apparatus
    noise = config.noise.with_seed(seed)
    spectrum = synthesize_spectrum(jittered_center(cfg.free_frequency, noise), cfg.linewidth, noise)
    params, fit = fit_lorentzian(spectrum)
    return ResonanceOutcome(params=params, fit=fit)
