from __future__ import annotations

import logging

import numpy as np

from app.core.errors import ConfigurationError, ContactError
from app.physics.apparatus import ApparatusConfig, WedgeGeometry
from app.physics.models import (
    attractive_force,
    attractive_force_gradient,
    frequency_shift_model,
    gap_distance,
)
from app.physics.wedge import wedge_averaged_shift
from app.simulator.config import DriftConfig, NoiseConfig, ScanPlan
from app.simulator.records import MeasurementRun

logger = logging.getLogger(__name__)

BENDING_TOLERANCE = 1e-12  # m
BENDING_MAX_ITER = 50


def static_bending(
    d_nominal: float,
    v_r: float,
    cfg: ApparatusConfig,
    *,
    casimir_kc: float | None = None,
    tol: float = BENDING_TOLERANCE,
    max_iter: int = BENDING_MAX_ITER,
) -> tuple[float, int]:
    """Solve d_s = F(d_nominal - d_s)/k for the static bending of the resonator.

    Newton iterations from d_s = 0 approach the stable root from below. A
    force gradient reaching the stiffness means snap-in.
    Returns (d_s, iterations).
    """
    stiffness = cfg.stiffness
    bending = 0.0
    for iteration in range(1, max_iter + 1):
        gap = d_nominal - bending
        if not gap > 0:
            raise ContactError(f"plates touched while bending (nominal gap {d_nominal!r} m)")
        residual = bending - attractive_force(gap, v_r, cfg, casimir_kc=casimir_kc) / stiffness
        slope = 1.0 + attractive_force_gradient(gap, v_r, cfg, casimir_kc=casimir_kc) / stiffness
        if not slope > 0:
            raise ContactError(f"snap-in: force gradient exceeds stiffness at gap {gap!r} m")
        step = residual / slope
        bending -= step
        if abs(step) < tol:
            return bending, iteration
    raise ContactError(f"no static equilibrium found at nominal gap {d_nominal!r} m")


def run_gap_scan(
    cfg: ApparatusConfig,
    plan: ScanPlan,
    noise: NoiseConfig,
    drift: DriftConfig,
    casimir_on: bool = True,
    *,
    label: str = "scan",
    role: str = "scan",
    config_hash: str = "",
    geometry: WedgeGeometry | None = None,
) -> MeasurementRun:
    """Simulate one gap scan: squared-frequency shifts with bending, drift and noise.

    The recorded shift is the shift law minus the apparatus frequency offset,
    which is its own term (``ApparatusConfig.frequency_offset``, zero for the
    bare law). A tilted geometry replaces the Casimir term by its wedge average.
    """
    if not plan.steps:
        raise ConfigurationError("scan plan has no steps")

    c_el = cfg.electrostatic_coefficient
    c_cas = cfg.casimir_coefficient if casimir_on else 0.0
    casimir_kc = cfg.casimir_kc if casimir_on else 0.0
    sigma = noise.delta_nu2_sigma_factor * cfg.free_frequency
    if not sigma > 0:
        raise ConfigurationError("frequency_stat_sigma must be positive to weight the run")

    rng = np.random.default_rng(noise.rng_seed)
    draws = rng.standard_normal(len(plan.steps))
    times = plan.start_times

    v_pzt = np.empty(len(plan.steps))
    v_c = np.empty(len(plan.steps))
    shifts = np.empty(len(plan.steps))
    bendings = np.empty(len(plan.steps))
    for index, (step, t) in enumerate(zip(plan.steps, times)):
        v_r = step.v_c - cfg.offset_voltage
        d0 = cfg.distance_correction + drift.thermal_d0_drift * t
        nominal = gap_distance(step.v_pzt, 0.0, cfg, d0)
        bending, _ = static_bending(nominal, v_r, cfg, casimir_kc=casimir_kc)
        gap = gap_distance(step.v_pzt, bending, cfg, d0)

        if geometry is None or geometry.deviation == 0:
            shift = -cfg.frequency_offset + frequency_shift_model(gap, v_r, c_el, c_cas)
        else:
            shift = (
                -cfg.frequency_offset
                + frequency_shift_model(gap, v_r, c_el, 0.0)
                + wedge_averaged_shift(gap, geometry, c_cas)
            )
        shift += drift.shift_drift_rate * t
        if noise.inject_noise:
            shift += sigma * draws[index]

        v_pzt[index] = step.v_pzt
        v_c[index] = step.v_c
        shifts[index] = shift
        bendings[index] = bending

    bias = float(plan.steps[0].v_c)
    logger.debug(
        "Gap scan simulated | label=%s bias=%s points=%s casimir_on=%s seed=%s",
        label,
        bias,
        len(plan.steps),
        casimir_on,
        noise.rng_seed,
    )
    return MeasurementRun(
        label=label,
        bias=bias,
        v_pzt=v_pzt,
        v_c=v_c,
        timestamp=np.asarray(times, dtype=float),
        delta_nu2=shifts,
        sigma_delta_nu2=np.full(len(plan.steps), sigma),
        d_s=bendings,
        role=role,
        seed=noise.rng_seed,
        config_hash=config_hash,
    )
