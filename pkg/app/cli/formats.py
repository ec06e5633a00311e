"""On-disk formats: the JSON experiment config and the delimited run-data files.

Units live in the key and column names. Floats are written in plain decimal
notation from their shortest round-tripping representation, so parsing a
written file restores every value bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import Decimal
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.core.errors import ConfigurationError, DataError
from app.physics.apparatus import (
    DEFAULT_AREA,
    DEFAULT_CASIMIR_KC,
    DEFAULT_EFFECTIVE_MASS,
    DEFAULT_PHYSICAL_MASS,
    ApparatusConfig,
)
from app.pipeline.campaign import (
    DEFAULT_BIASES,
    DEFAULT_CALIBRATION_GAPS,
    DEFAULT_DEFLECTION_BIASES,
    DEFAULT_DEFLECTION_GAPS,
    CampaignConfig,
    ParallelizationSettings,
)
from app.simulator.config import DriftConfig, NoiseConfig
from app.simulator.records import MeasurementRun

RUN_HEADER = ("v_pzt_volt", "v_c_mv", "t_s", "delta_nu2_hz2", "sigma_delta_nu2_hz2", "d_s_m")
# decimal exponent shift applied to each column when written
RUN_SHIFTS = (0, 3, 0, 0, 0, 0)


def decimal_text(value: float, shift: int = 0) -> str:
    """Plain decimal notation of value * 10**shift, exact for the shortest repr."""
    return format(Decimal(repr(float(value))).scaleb(shift), "f")


def parse_decimal(text: str, shift: int = 0) -> float:
    try:
        return float(Decimal(text.strip()).scaleb(-shift))
    except ArithmeticError as exc:
        raise DataError(f"not a decimal number: {text!r}") from exc


def _mm(value: float) -> float:
    return float(Decimal(repr(value)).scaleb(3))


def _um(value: float) -> float:
    return float(Decimal(repr(value)).scaleb(6))


def _mv(value: float) -> float:
    return float(Decimal(repr(value)).scaleb(3))


def _si(value: float, shift: int) -> float:
    return float(Decimal(repr(float(value))).scaleb(-shift))


_APPARATUS = ApparatusConfig()
_NOISE = NoiseConfig()
_PARALLEL = ParallelizationSettings()


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ApparatusSection(_Section):
    area_mm2: float = Field(default=float(Decimal(repr(DEFAULT_AREA)).scaleb(6)), gt=0)
    plate_width_mm: float = Field(default=_mm(_APPARATUS.plate_width), gt=0)
    plate_length_mm: float = Field(default=_mm(_APPARATUS.plate_length), gt=0)
    physical_mass_kg: float = Field(default=DEFAULT_PHYSICAL_MASS, gt=0)
    effective_mass_kg: float = Field(default=DEFAULT_EFFECTIVE_MASS, gt=0)
    nu0_hz: float = Field(default=_APPARATUS.free_frequency, gt=0)
    quality_factor: float = Field(default=_APPARATUS.quality_factor, gt=1)
    actuation_m_per_v: float = Field(default=_APPARATUS.actuation_coefficient, gt=0)
    reference_distance_um: float = Field(default=_um(_APPARATUS.reference_distance), gt=0)
    offset_voltage_mv: float = _mv(_APPARATUS.offset_voltage)
    distance_correction_um: float = _um(_APPARATUS.distance_correction)
    sensitivity_m_per_v: float = Field(default=_APPARATUS.interferometer_sensitivity, gt=0)
    frequency_offset_hz2: float = _APPARATUS.frequency_offset
    casimir_kc_n_m2: float = Field(default=DEFAULT_CASIMIR_KC, ge=0)
    stray_capacitance_pf: float = Field(default=0.0, ge=0)
    bridge_resolution_pf: float = Field(
        default=float(Decimal(repr(_APPARATUS.bridge_resolution)).scaleb(12)), gt=0
    )


class NoiseSection(_Section):
    frequency_stat_sigma_hz: float = Field(default=_NOISE.frequency_stat_sigma, ge=0)
    deflection_noise_nm: float = Field(
        default=float(Decimal(repr(_NOISE.deflection_noise)).scaleb(9)), ge=0
    )
    laser_drift_step_nm: float = Field(
        default=float(Decimal(repr(_NOISE.laser_drift_step)).scaleb(9)), ge=0
    )
    spectrum_bins: int = Field(default=_NOISE.spectrum_bins, ge=8)
    spectrum_noise_floor: float = Field(default=_NOISE.spectrum_noise_floor, ge=0)
    spectrum_peak_power: float = Field(default=_NOISE.spectrum_peak_power, gt=0)
    resolution_bandwidth_hz: float = Field(default=_NOISE.resolution_bandwidth, gt=0)
    rms_averages: int = Field(default=_NOISE.rms_averages, ge=1)
    reading_interval_s: float = Field(default=_NOISE.reading_interval, gt=0)
    inject_noise: bool = True


class DriftSection(_Section):
    shift_drift_hz2_per_s: float = 0.0
    thermal_d0_drift_m_per_s: float = 0.0


class ParallelizationSection(_Section):
    min_gap_um: float = Field(default=_um(_PARALLEL.min_gap), gt=0)
    start_tilt_rad: tuple[float, float] = _PARALLEL.start_tilt
    initial_step_rad: float = Field(default=_PARALLEL.initial_step, gt=0)
    min_step_rad: float = Field(default=_PARALLEL.min_step, gt=0)
    quantized: bool = True
    max_moves: int = Field(default=_PARALLEL.max_moves, ge=1)


class OutputSection(_Section):
    """How results are written; not part of the campaign or its hash."""

    write_plots: bool = True
    max_concurrency: int = Field(default=4, ge=1)


class ConfigFile(_Section):
    """JSON experiment configuration; every missing key takes its published default."""

    apparatus: ApparatusSection = ApparatusSection()
    noise: NoiseSection = NoiseSection()
    drift: DriftSection = DriftSection()
    parallelization: ParallelizationSection = ParallelizationSection()
    output: OutputSection = OutputSection()
    bias_mv: tuple[float, ...] = tuple(_mv(v) for v in DEFAULT_BIASES)
    scan_near_um: float = 0.5
    scan_far_um: float = 3.0
    scan_step_v: float = 0.5
    calibration_gaps_um: tuple[float, ...] = tuple(_um(g) for g in DEFAULT_CALIBRATION_GAPS)
    deflection_gaps_um: tuple[float, ...] = tuple(_um(g) for g in DEFAULT_DEFLECTION_GAPS)
    deflection_bias_mv: tuple[float, ...] = tuple(_mv(v) for v in DEFAULT_DEFLECTION_BIASES)
    dwell_time_s: float = Field(default=60.0, gt=0)
    casimir_on: bool = True
    scan_tilt_rad: float = 0.0
    casimir_points: int | None = Field(default=None, ge=2)
    propagation: Literal["effective_variance", "joint"] = "effective_variance"
    shared_offset: bool = True
    cancel_bias_mv: float | None = None
    seed: int = Field(default=0, ge=0)

    def to_campaign(self) -> CampaignConfig:
        a, n, d, p = self.apparatus, self.noise, self.drift, self.parallelization
        try:
            return CampaignConfig(
                apparatus=ApparatusConfig(
                    plate_area=_si(a.area_mm2, 6),
                    plate_width=_si(a.plate_width_mm, 3),
                    plate_length=_si(a.plate_length_mm, 3),
                    physical_mass=a.physical_mass_kg,
                    effective_mass=a.effective_mass_kg,
                    free_frequency=a.nu0_hz,
                    quality_factor=a.quality_factor,
                    actuation_coefficient=a.actuation_m_per_v,
                    reference_distance=_si(a.reference_distance_um, 6),
                    offset_voltage=_si(a.offset_voltage_mv, 3),
                    distance_correction=_si(a.distance_correction_um, 6),
                    interferometer_sensitivity=a.sensitivity_m_per_v,
                    frequency_offset=a.frequency_offset_hz2,
                    casimir_kc=a.casimir_kc_n_m2,
                    stray_capacitance=_si(a.stray_capacitance_pf, 12),
                    bridge_resolution=_si(a.bridge_resolution_pf, 12),
                ),
                noise=NoiseConfig(
                    frequency_stat_sigma=n.frequency_stat_sigma_hz,
                    deflection_noise=_si(n.deflection_noise_nm, 9),
                    laser_drift_step=_si(n.laser_drift_step_nm, 9),
                    spectrum_bins=n.spectrum_bins,
                    spectrum_noise_floor=n.spectrum_noise_floor,
                    spectrum_peak_power=n.spectrum_peak_power,
                    resolution_bandwidth=n.resolution_bandwidth_hz,
                    rms_averages=n.rms_averages,
                    reading_interval=n.reading_interval_s,
                    inject_noise=n.inject_noise,
                ),
                drift=DriftConfig(
                    shift_drift_rate=d.shift_drift_hz2_per_s,
                    thermal_d0_drift=d.thermal_d0_drift_m_per_s,
                ),
                parallelization=ParallelizationSettings(
                    min_gap=_si(p.min_gap_um, 6),
                    start_tilt=p.start_tilt_rad,
                    initial_step=p.initial_step_rad,
                    min_step=p.min_step_rad,
                    quantized=p.quantized,
                    max_moves=p.max_moves,
                ),
                biases=tuple(_si(v, 3) for v in self.bias_mv),
                scan_near=_si(self.scan_near_um, 6),
                scan_far=_si(self.scan_far_um, 6),
                scan_step_v=self.scan_step_v,
                calibration_gaps=tuple(_si(g, 6) for g in self.calibration_gaps_um),
                dwell_time=self.dwell_time_s,
                deflection_gaps=tuple(_si(g, 6) for g in self.deflection_gaps_um),
                deflection_biases=tuple(_si(v, 3) for v in self.deflection_bias_mv),
                casimir_on=self.casimir_on,
                scan_tilt=self.scan_tilt_rad,
                casimir_points=self.casimir_points,
                propagation=self.propagation,
                shared_offset=self.shared_offset,
                cancel_bias_override=(
                    None if self.cancel_bias_mv is None else _si(self.cancel_bias_mv, 3)
                ),
                seed=self.seed,
            )
        except ValidationError as exc:
            raise ConfigurationError(_describe_validation(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2) + "\n"


def _describe_validation(exc: ValidationError) -> str:
    problems = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<root>"
        problems.append(f"{location}: {error['msg']}")
    return "invalid config | " + "; ".join(problems)


def parse_config(text: str) -> ConfigFile:
    try:
        payload = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config is not valid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return ConfigFile.model_validate(payload)
    except ValidationError as exc:
        raise ConfigurationError(_describe_validation(exc)) from exc


def load_config(path: str | Path | None) -> ConfigFile:
    if path is None:
        return ConfigFile()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
    return parse_config(text)


def serialize_run(run: MeasurementRun) -> str:
    buffer = io.StringIO()
    metadata = {
        "label": run.label,
        "role": run.role,
        "bias_mv": decimal_text(run.bias, 3),
        "seed": "" if run.seed is None else str(run.seed),
        "config_hash": run.config_hash,
        **run.metadata,
    }
    for key, value in metadata.items():
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RUN_HEADER)
    columns = (run.v_pzt, run.v_c, run.timestamp, run.delta_nu2, run.sigma_delta_nu2, run.d_s)
    for index in range(run.n_points):
        writer.writerow(
            [decimal_text(column[index], shift) for column, shift in zip(columns, RUN_SHIFTS)]
        )
    return buffer.getvalue()


def parse_run(text: str, *, source: str = "<run>") -> MeasurementRun:
    metadata: dict[str, str] = {}
    body: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise DataError(f"{source}: metadata line without '=': {line!r}")
            metadata[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or tuple(rows[0]) != RUN_HEADER:
        raise DataError(f"{source}: header must be {','.join(RUN_HEADER)}")
    values = np.empty((len(rows) - 1, len(RUN_HEADER)))
    for index, row in enumerate(rows[1:]):
        if len(row) != len(RUN_HEADER):
            raise DataError(f"{source}: row {index + 1} has {len(row)} columns")
        values[index] = [parse_decimal(cell, shift) for cell, shift in zip(row, RUN_SHIFTS)]

    label = metadata.pop("label", Path(source).stem)
    role = metadata.pop("role", "scan")
    bias_text = metadata.pop("bias_mv", "")
    seed_text = metadata.pop("seed", "")
    config_hash = metadata.pop("config_hash", "")
    v_c = values[:, 1].copy()
    if bias_text:
        bias = parse_decimal(bias_text, 3)
    elif v_c.size:
        bias = float(v_c[0])
    else:
        raise DataError(f"{source}: run has no points and no bias_mv")
    return MeasurementRun(
        label=label,
        bias=bias,
        v_pzt=values[:, 0].copy(),
        v_c=v_c,
        timestamp=values[:, 2].copy(),
        delta_nu2=values[:, 3].copy(),
        sigma_delta_nu2=values[:, 4].copy(),
        d_s=values[:, 5].copy(),
        role=role,
        seed=int(seed_text) if seed_text else None,
        config_hash=config_hash,
        metadata=metadata,
    )


def write_run(run: MeasurementRun, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_run(run), encoding="utf-8", newline="")
    return path


def read_run(path: str | Path) -> MeasurementRun:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read run file {str(path)!r}: {exc.strerror}") from exc
    return parse_run(text, source=str(path))


def write_table(
    path: str | Path,
    header: tuple[str, ...],
    rows,
    metadata: dict[str, str] | None = None,
) -> Path:
    """Delimited table in the run-file layout; numbers as exact decimals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    for key, value in (metadata or {}).items():
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [cell if isinstance(cell, str) else decimal_text(cell) for cell in row]
        )
    path.write_text(buffer.getvalue(), encoding="utf-8", newline="")
    return path
