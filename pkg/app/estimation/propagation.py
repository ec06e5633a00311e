"""Electrostatic subtraction and linear propagation of calibration uncertainty."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from app.core.errors import DataError, DomainError
from app.physics.apparatus import ApparatusConfig
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants
from app.physics.models import kc_from_coefficients
from app.physics.params import CalibrationParams
from app.simulator.records import MeasurementRun


@dataclass(frozen=True, eq=False)
class ResidualRun:
    """A run with the fitted electrostatic term removed.

    Keeps the measured columns so the subtraction can be redone exactly at
    other calibration values, and the per-point gradient of the residual with
    respect to (offset, d0, C_el, V0).
    """

    label: str
    gap: np.ndarray
    sigma_gap: np.ndarray
    residual: np.ndarray
    sigma_residual: np.ndarray
    sigma_measured: np.ndarray
    gradients: np.ndarray
    d_r: np.ndarray
    v_c: np.ndarray
    delta_nu2: np.ndarray
    timestamp: np.ndarray
    calibration: CalibrationParams

    @property
    def n_points(self) -> int:
        return int(self.gap.size)

    def residual_at(self, theta: np.ndarray) -> np.ndarray:
        """Residual recomputed with calibration values theta = (offset, d0, C_el, V0)."""
        offset, d0, c_el, v0 = theta
        d = self.d_r + d0
        return self.delta_nu2 + offset + c_el * (self.v_c - v0) ** 2 / d**3

    def smallest(self, n_points: int) -> "ResidualRun":
        """The n_points entries at the smallest gaps, ordered by gap."""
        if n_points > self.n_points:
            raise DataError(f"run {self.label!r} has {self.n_points} points, {n_points} requested")
        order = np.argsort(self.gap, kind="stable")[:n_points]
        return ResidualRun(
            label=self.label,
            gap=self.gap[order],
            sigma_gap=self.sigma_gap[order],
            residual=self.residual[order],
            sigma_residual=self.sigma_residual[order],
            sigma_measured=self.sigma_measured[order],
            gradients=self.gradients[order],
            d_r=self.d_r[order],
            v_c=self.v_c[order],
            delta_nu2=self.delta_nu2[order],
            timestamp=self.timestamp[order],
            calibration=self.calibration,
        )


def subtract_electrostatic(
    run: MeasurementRun, cal: CalibrationParams, cfg: ApparatusConfig
) -> ResidualRun:
    """residual = measured + offset + C_el V_r^2 / d^3 with d = d_r + d0."""
    d_r = run.relative_displacement(cfg)
    gap = d_r + cal.d0
    if np.any(~(gap > 0)):
        raise DomainError(f"run {run.label!r} maps to non-positive gaps under this calibration")
    v_r = run.v_c - cal.v0
    residual = run.delta_nu2 + cal.delta_nu2_offset + cal.c_el * v_r**2 / gap**3

    gradients = np.column_stack(
        (
            np.ones_like(gap),
            -3.0 * cal.c_el * v_r**2 / gap**4,
            v_r**2 / gap**3,
            -2.0 * cal.c_el * v_r / gap**3,
        )
    )
    propagated = np.einsum("ij,jk,ik->i", gradients, cal.cov, gradients)
    sigma_residual = np.sqrt(run.sigma_delta_nu2**2 + np.clip(propagated, 0.0, None))
    return ResidualRun(
        label=run.label,
        gap=gap,
        sigma_gap=np.full_like(gap, cal.sigma("d0")),
        residual=residual,
        sigma_residual=sigma_residual,
        sigma_measured=np.asarray(run.sigma_delta_nu2, dtype=float),
        gradients=gradients,
        d_r=d_r,
        v_c=np.asarray(run.v_c, dtype=float),
        delta_nu2=np.asarray(run.delta_nu2, dtype=float),
        timestamp=np.asarray(run.timestamp, dtype=float),
        calibration=cal,
    )


def propagate_kc(
    c_cas: float,
    c_el: float,
    covariance: np.ndarray,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> tuple[float, float]:
    """K_C and its sigma from the joint (C_Cas, C_el) covariance."""
    covariance = np.asarray(covariance, dtype=float)
    if covariance.shape != (2, 2):
        raise DomainError("K_C propagation needs the 2x2 (C_Cas, C_el) covariance")
    kc = kc_from_coefficients(c_cas, c_el, constants)
    gradient = np.array([constants.epsilon0 / (4.0 * c_el), -kc / c_el])
    variance = float(gradient @ covariance @ gradient)
    return kc, math.sqrt(max(variance, 0.0))
