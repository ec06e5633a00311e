"""Weighted nonlinear least squares with a Levenberg-Marquardt damping schedule.

Residuals are r = (y - f(x, p)) / sigma. Each iteration solves the damped,
column-scaled normal equations (A_s + lambda I) ds = g_s where A = J^T J and
g = J^T r for the weighted model Jacobian J = (df/dp) / sigma. The damping
shrinks on every accepted step and grows on every rejected one; a step is
accepted only when it does not raise chi2.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import DataError, DegeneracyError, DomainError
from app.estimation.chi2 import chi2_probability
from app.estimation.results import FitResult, matrix_tuple

logger = logging.getLogger(__name__)

ModelCallable = Callable[[np.ndarray, np.ndarray], np.ndarray]

FD_RELATIVE_STEP = 1e-6


@dataclass(frozen=True)
class ModelFunction:
    """f(x, p) with an optional analytic Jacobian df/dp of shape (n_points, n_params)."""

    func: ModelCallable
    n_params: int
    jacobian: ModelCallable | None = None
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.n_params < 1:
            raise DomainError("a model needs at least one parameter")
        if self.names and len(self.names) != self.n_params:
            raise DomainError("parameter names do not match the parameter count")

    def evaluate(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(x, p), dtype=float)

    def derivatives(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        if self.jacobian is None:
            return finite_difference_jacobian(self.func, x, p)
        return np.asarray(self.jacobian(x, p), dtype=float).reshape(-1, self.n_params)


@dataclass(frozen=True, eq=False)
class FitData:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        if self.y.shape != self.sigma.shape or self.y.ndim != 1:
            raise DataError("fit data y and sigma must be 1-D arrays of equal length")
        if len(self.x) != self.y.size:
            raise DataError("fit data x and y differ in length")
        if np.any(~(self.sigma > 0)):
            raise DataError("fit data uncertainties must be positive")

    @classmethod
    def of(cls, x, y, sigma=None) -> "FitData":
        y = np.asarray(y, dtype=float)
        sigma = np.ones_like(y) if sigma is None else np.broadcast_to(
            np.asarray(sigma, dtype=float), y.shape
        ).copy()
        return cls(x=np.asarray(x, dtype=float), y=y, sigma=sigma)

    @property
    def n_points(self) -> int:
        return int(self.y.size)


class LMOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_damping: float = Field(default=1e-3, gt=0)
    damping_on_accept: float = Field(default=0.3, gt=0, lt=1)
    damping_on_reject: float = Field(default=2.0, gt=1)
    max_damping: float = Field(default=1e12, gt=0)
    max_iterations: int = Field(default=200, ge=1)
    chi2_rtol: float = Field(default=1e-10, ge=0)
    step_tol: float = Field(default=1e-12, ge=0)
    max_condition: float = Field(default=1e12, gt=1)


DEFAULT_OPTIONS = LMOptions()


def finite_difference_jacobian(func: ModelCallable, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Central differences with step 1e-6 |p_k| (1e-6 for p_k = 0)."""
    p = np.asarray(p, dtype=float)
    columns = []
    for k in range(p.size):
        h = FD_RELATIVE_STEP * abs(p[k]) if p[k] != 0 else FD_RELATIVE_STEP
        upper, lower = p.copy(), p.copy()
        upper[k] += h
        lower[k] -= h
        diff = np.asarray(func(x, upper), dtype=float) - np.asarray(func(x, lower), dtype=float)
        columns.append(diff / (upper[k] - lower[k]))
    return np.column_stack(columns)


def check_jacobian(model: ModelFunction, x: np.ndarray, p: np.ndarray) -> float:
    """Largest column-normalized gap between the analytic and finite-difference Jacobians."""
    if model.jacobian is None:
        raise DomainError("model has no analytic Jacobian to check")
    analytic = model.derivatives(x, p)
    numeric = finite_difference_jacobian(model.func, x, p)
    worst = 0.0
    for k in range(analytic.shape[1]):
        scale = np.max(np.abs(analytic[:, k]))
        gap = np.max(np.abs(analytic[:, k] - numeric[:, k]))
        if scale == 0:
            worst = max(worst, float(gap))
        else:
            worst = max(worst, float(gap / scale))
    return worst


def _weighted_residuals(model: ModelFunction, data: FitData, p: np.ndarray) -> np.ndarray:
    return (data.y - model.evaluate(data.x, p)) / data.sigma


def _normal_equations(
    model: ModelFunction, data: FitData, p: np.ndarray, r: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    jac = model.derivatives(data.x, p) / data.sigma[:, None]
    if not np.all(np.isfinite(jac)):
        raise DomainError("model Jacobian is not finite at the current parameters")
    normal = jac.T @ jac
    scale = np.sqrt(np.diag(normal))
    if np.any(scale == 0):
        names = model.names or tuple(f"p{k}" for k in range(model.n_params))
        frozen = [names[k] for k in np.flatnonzero(scale == 0)]
        raise DegeneracyError(f"data carry no information on parameters {frozen}")
    return normal, jac.T @ r, scale


def _covariance(normal: np.ndarray, scale: np.ndarray, options: LMOptions) -> np.ndarray:
    scaled = normal / np.outer(scale, scale)
    condition = np.linalg.cond(scaled)
    if not condition < options.max_condition:
        raise DegeneracyError(f"normal matrix is singular (condition number {condition:.3g})")
    cov = np.linalg.inv(scaled) / np.outer(scale, scale)
    return 0.5 * (cov + cov.T)


def _is_stationary(
    scaled_normal: np.ndarray, scaled_gradient: np.ndarray, chi2: float, data: FitData, options: LMOptions
) -> bool:
    """True when the undamped Gauss-Newton step would not lower chi2 measurably."""
    floor = 1e-24 * float(np.sum((data.y / data.sigma) ** 2))
    if chi2 <= floor:
        return True
    step, *_ = np.linalg.lstsq(scaled_normal, scaled_gradient, rcond=None)
    predicted_drop = float(scaled_gradient @ step)
    return bool(np.isfinite(predicted_drop) and predicted_drop <= options.chi2_rtol * chi2)


def lm_fit(
    model: ModelFunction,
    data: FitData,
    initial,
    options: LMOptions = DEFAULT_OPTIONS,
) -> FitResult:
    """Minimize the weighted chi2 from `initial`.

    Non-convergence within the iteration cap, or a search that stalls away
    from a stationary point, is reported through `converged=False`; the
    partial result still carries a covariance.
    """
    p = np.array(initial, dtype=float).reshape(-1)
    if p.size != model.n_params:
        raise DomainError(f"expected {model.n_params} initial parameters, got {p.size}")
    dof = data.n_points - model.n_params
    if dof < 1:
        raise DataError(
            f"{data.n_points} points cannot constrain {model.n_params} parameters"
        )

    r = _weighted_residuals(model, data, p)
    if not np.all(np.isfinite(r)):
        raise DomainError("model is not finite at the initial parameters")
    chi2 = float(r @ r)
    damping = options.initial_damping
    identity = np.eye(model.n_params)
    converged = False
    iterations = 0

    while iterations < options.max_iterations:
        iterations += 1
        normal, gradient, scale = _normal_equations(model, data, p, r)
        scaled_normal = normal / np.outer(scale, scale)
        scaled_gradient = gradient / scale

        accepted = False
        while damping <= options.max_damping:
            try:
                scaled_step = np.linalg.solve(scaled_normal + damping * identity, scaled_gradient)
            except np.linalg.LinAlgError:
                damping *= options.damping_on_reject
                continue
            step = scaled_step / scale
            trial = p + step
            try:
                with np.errstate(all="ignore"):
                    r_trial = _weighted_residuals(model, data, trial)
            except DomainError:
                r_trial = np.full_like(r, np.nan)
            chi2_trial = float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else np.inf
            if chi2_trial <= chi2:
                accepted = True
                damping *= options.damping_on_accept
                break
            damping *= options.damping_on_reject

        if not accepted:
            # damping ran out: only a stationary point counts as converged
            converged = _is_stationary(scaled_normal, scaled_gradient, chi2, data, options)
            break

        drop = (chi2 - chi2_trial) / chi2 if chi2 > 0 else 0.0
        small_step = np.linalg.norm(scaled_step) <= options.step_tol * (
            np.linalg.norm(scale * trial) + options.step_tol
        )
        p, r, chi2 = trial, r_trial, chi2_trial
        if drop < options.chi2_rtol or small_step:
            converged = True
            break

    normal, _, scale = _normal_equations(model, data, p, r)
    cov = _covariance(normal, scale, options)
    if not converged:
        logger.warning(
            "Fit did not converge | iterations=%s chi2=%s damping=%s", iterations, chi2, damping
        )
    return FitResult(
        parameters=tuple(float(v) for v in p),
        covariance=matrix_tuple(cov),
        names=model.names,
        chi2=chi2,
        dof=dof,
        chi2_probability=chi2_probability(chi2, dof),
        converged=converged,
        iterations=iterations,
    )
