from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import ConfigurationError
from app.physics.apparatus import ApparatusConfig
from app.physics.models import nominal_gap_for
from app.physics.published import published

DEFAULT_BUDGET = published("acquisition_budget").value


class NoiseConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    frequency_stat_sigma: float = Field(default=published("frequency_stat_sigma").value, ge=0)
    spectrum_noise_floor: float = Field(default=1.9e-7, ge=0)
    spectrum_peak_power: float = Field(default=1.0e-6, gt=0)
    spectrum_bins: int = Field(default=128, ge=8)
    resolution_bandwidth: float = Field(default=published("resolution_bandwidth").value, gt=0)
    rms_averages: int = Field(default=int(published("rms_averages").value), ge=1)
    deflection_noise: float = Field(default=0.3e-9, ge=0)
    laser_drift_step: float = Field(default=1.5e-9, ge=0)
    reading_interval: float = Field(default=1.0, gt=0)
    inject_noise: bool = True
    rng_seed: int = Field(default=0, ge=0, lt=2**64)

    @property
    def delta_nu2_sigma_factor(self) -> float:
        return 2.0 * self.frequency_stat_sigma

    def with_seed(self, seed: int) -> "NoiseConfig":
        return self.model_copy(update={"rng_seed": int(seed)})

    @classmethod
    def quiet(cls, **overrides) -> "NoiseConfig":
        """Nominal error bars recorded, no random draws applied."""
        return cls(inject_noise=False, **overrides)


class DriftConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    shift_drift_rate: float = 0.0
    thermal_d0_drift: float = 0.0

    def total_span(self, duration: float) -> float:
        return self.shift_drift_rate * duration

    @classmethod
    def spanning(cls, total_span: float, duration: float, **overrides) -> "DriftConfig":
        if not duration > 0:
            raise ConfigurationError("drift duration must be positive")
        return cls(shift_drift_rate=total_span / duration, **overrides)


class ScanStep(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    v_pzt: float
    v_c: float
    dwell_time: float = Field(default=60.0, gt=0)


class ScanPlan(BaseModel):
    """PZT steps at increasing voltage; the acquisition budget caps total dwell."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    steps: tuple[ScanStep, ...]
    budget: float = Field(default=DEFAULT_BUDGET, gt=0)

    @model_validator(mode="after")
    def _check_monotone_and_budget(self) -> "ScanPlan":
        voltages = [step.v_pzt for step in self.steps]
        if any(b <= a for a, b in zip(voltages, voltages[1:])):
            raise ConfigurationError("scan plan V_PZT must be strictly increasing")
        if self.duration > self.budget:
            raise ConfigurationError(
                f"scan plan lasts {self.duration:.1f} s, above the {self.budget:.1f} s budget"
            )
        return self

    @property
    def duration(self) -> float:
        return math.fsum(step.dwell_time for step in self.steps)

    @property
    def start_times(self) -> np.ndarray:
        dwell = np.array([step.dwell_time for step in self.steps], dtype=float)
        return np.concatenate(([0.0], np.cumsum(dwell)[:-1])) if dwell.size else dwell

    @classmethod
    def for_gaps(
        cls,
        cfg: ApparatusConfig,
        gaps: list[float] | np.ndarray,
        v_c: float,
        *,
        dwell_time: float = 60.0,
        budget: float = DEFAULT_BUDGET,
        casimir_on: bool = True,
    ) -> "ScanPlan":
        """Steps whose static equilibrium lands on the requested gaps."""
        voltages = sorted(_pzt_voltage(cfg, float(g), v_c, casimir_on) for g in gaps)
        return cls(
            steps=tuple(ScanStep(v_pzt=v, v_c=v_c, dwell_time=dwell_time) for v in voltages),
            budget=budget,
        )

    @classmethod
    def stepped(
        cls,
        cfg: ApparatusConfig,
        near_gap: float,
        far_gap: float,
        v_c: float,
        *,
        step_v: float = 0.5,
        dwell_time: float = 60.0,
        budget: float = DEFAULT_BUDGET,
        casimir_on: bool = True,
    ) -> "ScanPlan":
        """Gaps spaced by one PZT step from the near gap out to the far gap.

        The step count follows the requested span; each step is then moved
        so the bent resonator settles on its gap.
        """
        if not 0 < near_gap < far_gap:
            raise ConfigurationError("scan range must be positive and increasing")
        if not step_v > 0:
            raise ConfigurationError("PZT step must be positive")
        spacing = cfg.actuation_coefficient * step_v
        count = int(math.floor((far_gap - near_gap) / spacing + 1e-9)) + 1
        gaps = [near_gap + spacing * k for k in range(count)]
        return cls.for_gaps(
            cfg, gaps, v_c, dwell_time=dwell_time, budget=budget, casimir_on=casimir_on
        )


def _pzt_voltage(cfg: ApparatusConfig, gap: float, v_c: float, casimir_on: bool) -> float:
    casimir_kc = None if casimir_on else 0.0
    nominal = nominal_gap_for(gap, v_c - cfg.offset_voltage, cfg, casimir_kc=casimir_kc)
    base = cfg.reference_distance + cfg.distance_correction
    return (base - nominal) / cfg.actuation_coefficient
