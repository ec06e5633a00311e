"""Fit outcomes shared by every estimator."""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.estimation.chi2 import chi2_lower_tail
from app.physics.params import CasimirParams


class FitResult(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    parameters: tuple[float, ...]
    covariance: tuple[tuple[float, ...], ...]
    names: tuple[str, ...] = ()
    chi2: float = Field(ge=0)
    dof: int = Field(ge=1)
    chi2_probability: float = Field(ge=0, le=1)
    converged: bool
    iterations: int = Field(ge=0)

    @field_validator("covariance")
    @classmethod
    def _check_square(cls, value: tuple[tuple[float, ...], ...]) -> tuple[tuple[float, ...], ...]:
        if any(len(row) != len(value) for row in value):
            raise ValueError("covariance must be square")
        return value

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.parameters, dtype=float)

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float).reshape(len(self.parameters), -1)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    @property
    def correlation(self) -> np.ndarray:
        errors = self.errors
        scale = np.outer(errors, errors)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.where(scale > 0, self.cov / scale, 0.0)
        np.fill_diagonal(corr, 1.0)
        return np.clip(corr, -1.0, 1.0)

    def value(self, name: str) -> float:
        return float(self.parameters[self.names.index(name)])

    def sigma(self, name: str) -> float:
        return float(self.errors[self.names.index(name)])

    def with_covariance_scaled(self, factor: float) -> "FitResult":
        scaled = self.cov * factor
        return self.model_copy(update={"covariance": matrix_tuple(scaled)})

    def with_covariance(self, covariance: np.ndarray) -> "FitResult":
        return self.model_copy(update={"covariance": matrix_tuple(covariance)})


def matrix_tuple(matrix: np.ndarray) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in np.atleast_2d(matrix))


class LorentzianParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    center: float
    linewidth: float = Field(gt=0)
    amplitude: float = Field(ge=0)
    baseline: float
    sigma_center: float = Field(ge=0)
    sigma_linewidth: float = Field(ge=0)

    @property
    def quality_factor(self) -> float:
        return self.center / self.linewidth

    @property
    def sigma_quality_factor(self) -> float:
        return self.quality_factor * math.hypot(
            self.sigma_center / self.center, self.sigma_linewidth / self.linewidth
        )


class SelectionStep(BaseModel):
    """One row of the smallest-distance point-count scan."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_points: int
    c_cas: float
    sigma_c_cas: float
    chi2: float
    chi2_probability: float

    @property
    def chi2_lower_tail(self) -> float:
        return chi2_lower_tail(self.chi2, self.n_points - 1)


class ExponentFit(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    exponent: float
    sigma_exponent: float
    amplitude: float
    sigma_amplitude: float
    fit: FitResult


class WedgeFit(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    deviation: float = Field(ge=0)
    sigma_deviation: float = Field(ge=0)
    deviation_squared: float
    sigma_deviation_squared: float = Field(ge=0)
    c_cas: float
    sigma_c_cas: float = Field(ge=0)
    fit: FitResult


class DriftFit(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    drift_rate: float
    sigma_drift_rate: float
    fit: FitResult
    fit_without_drift: FitResult

    @property
    def chi2_probability(self) -> float:
        return self.fit.chi2_probability

    @property
    def chi2_probability_without_drift(self) -> float:
        return self.fit_without_drift.chi2_probability


class CasimirFit(BaseModel):
    """Casimir coefficient with the fit it came from and the point-count scan."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    params: CasimirParams
    fit: FitResult
    selection: tuple[SelectionStep, ...] = ()
    propagation: str = "effective_variance"
