from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from app.core.errors import DataError
from app.physics.apparatus import ApparatusConfig

RUN_COLUMNS = ("v_pzt", "v_c", "timestamp", "delta_nu2", "sigma_delta_nu2", "d_s")


@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    frequencies: np.ndarray
    power: np.ndarray
    bin_width: float
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.frequencies.shape != self.power.shape:
            raise DataError("spectrum frequency and power arrays differ in length")
        if np.any(self.power < 0):
            raise DataError("spectrum power must be non-negative")

    @property
    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.power))])


@dataclass(frozen=True, eq=False)
class MeasurementRun:
    """One gap scan at fixed counterbias: the unit every fit consumes."""

    label: str
    bias: float
    v_pzt: np.ndarray
    v_c: np.ndarray
    timestamp: np.ndarray
    delta_nu2: np.ndarray
    sigma_delta_nu2: np.ndarray
    d_s: np.ndarray
    role: str = "scan"
    seed: int | None = None
    config_hash: str = ""
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lengths = {len(getattr(self, name)) for name in RUN_COLUMNS}
        if len(lengths) != 1:
            raise DataError(f"run {self.label!r} has columns of different lengths")
        if np.any(~(self.sigma_delta_nu2 > 0)):
            raise DataError(f"run {self.label!r} has non-positive point uncertainties")

    @property
    def n_points(self) -> int:
        return int(self.v_pzt.size)

    def relative_displacement(self, cfg: ApparatusConfig) -> np.ndarray:
        """d_r = d_r0 - A V_PZT - d_s [m]."""
        return cfg.reference_distance - cfg.actuation_coefficient * self.v_pzt - self.d_s

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in RUN_COLUMNS}

    def same_as(self, other: "MeasurementRun") -> bool:
        return (
            self.label == other.label
            and self.bias == other.bias
            and self.role == other.role
            and self.seed == other.seed
            and all(np.array_equal(getattr(self, n), getattr(other, n)) for n in RUN_COLUMNS)
        )


@dataclass(frozen=True, eq=False)
class DeflectionSweep:
    """Alternated bias / zero-bias interferometer readings [V] per gap."""

    distances: np.ndarray
    biases: np.ndarray
    bias_readings: np.ndarray
    zero_before: np.ndarray
    zero_after: np.ndarray
    timestamps: np.ndarray
    sensitivity: float

    def alternation_differences(self) -> np.ndarray:
        """Bias reading minus the mean of the bracketing zero-bias readings."""
        return self.bias_readings - 0.5 * (self.zero_before + self.zero_after)


@dataclass(frozen=True, eq=False)
class CapacitanceMap:
    tilts: np.ndarray
    capacitance: np.ndarray
    min_gap: float
    quantum: float | None

    @property
    def best_tilt(self) -> tuple[float, float]:
        index = int(np.argmax(self.capacitance))
        return float(self.tilts[index, 0]), float(self.tilts[index, 1])
