"""Campaign configuration and the report every reproduction emits."""

from __future__ import annotations

import hashlib
import json
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import ConfigurationError
from app.estimation.results import (
    CasimirFit,
    DriftFit,
    ExponentFit,
    FitResult,
    LorentzianParams,
    WedgeFit,
)
from app.physics.apparatus import ApparatusConfig
from app.physics.params import CalibrationParams, CasimirParams
from app.simulator.config import DriftConfig, NoiseConfig

CANCEL_WINDOW = 15e-3  # V
DEFAULT_BIASES = (-205.8e-3, -137.2e-3, 68.6e-3, -68.6e-3)
DEFAULT_CALIBRATION_GAPS = tuple(float(g) for g in np.linspace(3.0e-6, 11.5e-6, 24))
DEFAULT_DEFLECTION_GAPS = (3e-6, 4e-6, 5e-6, 6e-6)
DEFAULT_DEFLECTION_BIASES = tuple(float(v) for v in np.linspace(-0.20, 0.08, 8))

SEED_LABELS = (
    "deflection",
    "calibration_0",
    "calibration_1",
    "calibration_2",
    "casimir",
    "spectrum",
)


class ParallelizationSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    min_gap: float = Field(default=0.4e-6, gt=0)
    start_tilt: tuple[float, float] = (6e-4, -4e-4)
    initial_step: float = Field(default=2.5e-4, gt=0)
    min_step: float = Field(default=1e-8, gt=0)
    quantized: bool = True
    max_moves: int = Field(default=10_000, ge=1)

    @model_validator(mode="after")
    def _check_start(self) -> "ParallelizationSettings":
        if max(abs(t) for t in self.start_tilt) > 1e-3:
            raise ConfigurationError("starting tilt must lie within +-1e-3 rad")
        if self.min_step > self.initial_step:
            raise ConfigurationError("min_step must not exceed initial_step")
        return self


class CampaignConfig(BaseModel):
    """Everything one reproduction needs besides its seed. SI units, volts."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    apparatus: ApparatusConfig = ApparatusConfig()
    noise: NoiseConfig = NoiseConfig()
    drift: DriftConfig = DriftConfig()
    biases: tuple[float, ...] = DEFAULT_BIASES
    scan_near: float = Field(default=0.5e-6, gt=0)
    scan_far: float = Field(default=3.0e-6, gt=0)
    scan_step_v: float = Field(default=0.5, gt=0)
    calibration_gaps: tuple[float, ...] = DEFAULT_CALIBRATION_GAPS
    dwell_time: float = Field(default=60.0, gt=0)
    deflection_gaps: tuple[float, ...] = DEFAULT_DEFLECTION_GAPS
    deflection_biases: tuple[float, ...] = DEFAULT_DEFLECTION_BIASES
    parallelization: ParallelizationSettings = ParallelizationSettings()
    casimir_on: bool = True
    scan_tilt: float = 0.0
    casimir_points: int | None = Field(default=None, ge=2)
    propagation: Literal["effective_variance", "joint"] = "effective_variance"
    shared_offset: bool = True
    cancel_bias_override: float | None = None
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_campaign(self) -> "CampaignConfig":
        if not 0 < self.scan_near < self.scan_far:
            raise ConfigurationError("scan range must be positive and increasing")
        near = [v for v in self.biases if abs(v - self.apparatus.offset_voltage) < CANCEL_WINDOW]
        if len(near) != 1:
            raise ConfigurationError(
                f"bias list needs exactly one near-cancellation entry, found {len(near)}"
            )
        if len(self.deflection_gaps) < 3 or min(self.deflection_gaps) <= 0:
            raise ConfigurationError("offset estimation needs at least 3 positive distances")
        if len(self.deflection_biases) < 5:
            raise ConfigurationError("offset estimation needs at least 5 bias values")
        if any(g <= 0 for g in self.calibration_gaps):
            raise ConfigurationError("calibration gaps must be positive")
        return self

    @property
    def cancel_bias(self) -> float:
        return next(
            v for v in self.biases if abs(v - self.apparatus.offset_voltage) < CANCEL_WINDOW
        )

    @property
    def calibration_biases(self) -> tuple[float, ...]:
        cancel = self.cancel_bias
        return tuple(v for v in self.biases if v != cancel)

    def with_seed(self, seed: int) -> "CampaignConfig":
        return self.model_copy(update={"seed": int(seed)})

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form, seed excluded."""
        payload = self.model_dump(mode="json", exclude={"seed"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def stage_seeds(self) -> dict[str, int]:
        states = np.random.SeedSequence(self.seed).generate_state(len(SEED_LABELS), dtype=np.uint64)
        return {label: int(state) for label, state in zip(SEED_LABELS, states)}


StageStatus = Literal["ok", "failed", "skipped"]


class StageOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    status: StageStatus
    error_type: str | None = None
    error: str | None = None
    exit_code: int = 0


class ParallelizationOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tilt_x: float
    tilt_y: float
    capacitance: float
    flat_capacitance: float
    moves: int
    aborted: bool = False
    trace: tuple[tuple[float, float, float], ...] = ()

    @property
    def residual_tilt(self) -> float:
        return float(np.hypot(self.tilt_x, self.tilt_y))


class OffsetOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    v0: float
    sigma_v0: float
    v0_per_distance: tuple[float, ...]
    deflection_coefficients: tuple[float, ...]
    effective_mass: float
    sigma_effective_mass: float
    effective_mass_ratio: float
    sigma_effective_mass_ratio: float


class ExtractionOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    cancel_bias: float
    casimir: CasimirFit
    exponent: ExponentFit
    wedge: WedgeFit
    drift_calibration: CalibrationParams
    drift_casimir: CasimirParams
    drift: DriftFit


class ResonanceOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    params: LorentzianParams
    fit: FitResult


class ComparisonRow(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    key: str
    unit: str
    published: float
    sigma_published: float | None
    recovered: float
    sigma_recovered: float | None
    truth: float | None
    pull_vs_published: float | None
    pull_vs_truth: float | None
    citation: str


class CampaignReport(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int
    config_hash: str
    stages: tuple[StageOutcome, ...]
    parallelization: ParallelizationOutcome | None = None
    offset: OffsetOutcome | None = None
    calibration: CalibrationParams | None = None
    extraction: ExtractionOutcome | None = None
    resonance: ResonanceOutcome | None = None
    effective_mass_dynamic: float | None = None
    comparisons: tuple[ComparisonRow, ...] = ()

    @property
    def ok(self) -> bool:
        return all(stage.status == "ok" for stage in self.stages)

    def stage(self, name: str) -> StageOutcome:
        return next(stage for stage in self.stages if stage.name == name)

    def row(self, key: str) -> ComparisonRow:
        return next(row for row in self.comparisons if row.key == key)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
