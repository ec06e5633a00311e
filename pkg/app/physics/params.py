from __future__ import annotations

import math
from typing import ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class CalibrationParams(BaseModel):
    """Global electrostatic calibration {Delta nu^2_offset, d0, C_el, V0}."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    NAMES: ClassVar[tuple[str, ...]] = ("delta_nu2_offset", "d0", "c_el", "v0")

    delta_nu2_offset: float
    d0: float
    c_el: float = Field(gt=0)
    v0: float
    covariance: tuple[tuple[float, ...], ...]
    run_offsets: tuple[float, ...] = ()
    chi2: float | None = None
    dof: int | None = None
    chi2_probability: float | None = None

    @field_validator("covariance")
    @classmethod
    def _check_covariance(cls, value: tuple[tuple[float, ...], ...]) -> tuple[tuple[float, ...], ...]:
        matrix = np.asarray(value, dtype=float)
        if matrix.shape != (4, 4):
            raise ValueError("calibration covariance must be 4x4")
        if not np.allclose(matrix, matrix.T, rtol=1e-9, atol=0.0):
            raise ValueError("calibration covariance must be symmetric")
        if np.any(np.diag(matrix) < 0):
            raise ValueError("calibration covariance has negative variances")
        return value

    @property
    def values(self) -> np.ndarray:
        return np.array([self.delta_nu2_offset, self.d0, self.c_el, self.v0])

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def sigma(self, name: str) -> float:
        return float(self.errors[self.NAMES.index(name)])

    @classmethod
    def exact(cls, delta_nu2_offset: float, d0: float, c_el: float, v0: float) -> "CalibrationParams":
        """Calibration with zero covariance, e.g. the simulator truth."""
        zeros = tuple(tuple(0.0 for _ in range(4)) for _ in range(4))
        return cls(delta_nu2_offset=delta_nu2_offset, d0=d0, c_el=c_el, v0=v0, covariance=zeros)


class CasimirParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    c_cas: float
    sigma_c_cas: float = Field(ge=0)
    kc: float
    sigma_kc: float = Field(ge=0)
    exponent: float = 5.0
    drift_rate: float = 0.0
    sigma_drift_rate: float = 0.0
    n_points: int = 0
    chi2_probability: float | None = None
    attractive: bool = True

    @property
    def relative_precision(self) -> float:
        if self.kc == 0:
            return math.inf
        return self.sigma_kc / abs(self.kc)
