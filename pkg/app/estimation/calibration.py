"""Global electrostatic calibration across bias runs.

All runs share d0, C_el and V0; the frequency offset is either shared or one
per run. The same layout, extended with a Casimir term and a linear drift in
time, backs the drift-augmented global fit.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.core.errors import ConvergenceError, DataError, IdentifiabilityError
from app.estimation.lm import FitData, ModelFunction, lm_fit
from app.estimation.results import FitResult, matrix_tuple
from app.physics.apparatus import ApparatusConfig
from app.physics.params import CalibrationParams
from app.simulator.records import MeasurementRun

logger = logging.getLogger(__name__)

MIN_RUN_POINTS = 4
MIN_DISTINCT_BIASES = 3

# columns of the stacked abscissa
COL_DR, COL_VC, COL_RUN, COL_T = range(4)


@dataclass(frozen=True)
class GlobalLayout:
    """Parameter vector [offsets..., d0, c_el, v0, (c_cas), (drift_rate)]."""

    n_offsets: int = 1
    casimir: bool = False
    drift: bool = False

    @property
    def names(self) -> tuple[str, ...]:
        if self.n_offsets == 1:
            offsets = ("delta_nu2_offset",)
        else:
            offsets = tuple(f"delta_nu2_offset_{k}" for k in range(self.n_offsets))
        extra = (("c_cas",) if self.casimir else ()) + (("drift_rate",) if self.drift else ())
        return offsets + ("d0", "c_el", "v0") + extra

    @property
    def n_params(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def _offsets(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        if self.n_offsets == 1:
            return np.full(len(x), p[0])
        return p[: self.n_offsets][x[:, COL_RUN].astype(int)]

    def evaluate(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        k = self.n_offsets
        d0, c_el, v0 = p[k], p[k + 1], p[k + 2]
        d = x[:, COL_DR] + d0
        v_r = x[:, COL_VC] - v0
        y = -self._offsets(x, p) - c_el * v_r**2 / d**3
        if self.casimir:
            y = y - p[self.index("c_cas")] / d**5
        if self.drift:
            y = y + p[self.index("drift_rate")] * x[:, COL_T]
        return y

    def jacobian(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        k = self.n_offsets
        d0, c_el, v0 = p[k], p[k + 1], p[k + 2]
        d = x[:, COL_DR] + d0
        v_r = x[:, COL_VC] - v0
        jac = np.zeros((len(x), self.n_params))
        if k == 1:
            jac[:, 0] = -1.0
        else:
            jac[np.arange(len(x)), x[:, COL_RUN].astype(int)] = -1.0
        jac[:, k] = 3.0 * c_el * v_r**2 / d**4
        jac[:, k + 1] = -(v_r**2) / d**3
        jac[:, k + 2] = 2.0 * c_el * v_r / d**3
        if self.casimir:
            c_cas = p[self.index("c_cas")]
            jac[:, k] += 5.0 * c_cas / d**6
            jac[:, self.index("c_cas")] = -1.0 / d**5
        if self.drift:
            jac[:, self.index("drift_rate")] = x[:, COL_T]
        return jac

    def model(self) -> ModelFunction:
        return ModelFunction(
            func=self.evaluate,
            n_params=self.n_params,
            jacobian=self.jacobian,
            names=self.names,
        )

    def linear_start(self, data: FitData, d0: float, v0: float) -> np.ndarray:
        """Starting point solving the linear subproblem at fixed d0 and V0."""
        p = np.zeros(self.n_params)
        p[self.n_offsets], p[self.n_offsets + 2] = d0, v0
        p[self.n_offsets + 1] = 1.0
        if self.casimir:
            p[self.index("c_cas")] = 1.0
        full = self.jacobian(data.x, p)
        linear = [k for k in range(self.n_params) if k not in (self.n_offsets, self.n_offsets + 2)]
        design = full[:, linear] / data.sigma[:, None]
        solution, *_ = np.linalg.lstsq(design, data.y / data.sigma, rcond=None)
        p[linear] = solution
        if not p[self.n_offsets + 1] > 0:
            p[self.n_offsets + 1] = abs(p[self.n_offsets + 1]) or 1e-13
        return p


def stack_runs(runs: Sequence[MeasurementRun], cfg: ApparatusConfig) -> FitData:
    """One FitData over all runs; x columns are (d_r, V_c, run index, t)."""
    if not runs:
        raise DataError("no runs to fit")
    for run in runs:
        if run.n_points < MIN_RUN_POINTS:
            raise DataError(
                f"run {run.label!r} has {run.n_points} points, at least {MIN_RUN_POINTS} needed"
            )
    x = np.concatenate(
        [
            np.column_stack(
                (
                    run.relative_displacement(cfg),
                    run.v_c,
                    np.full(run.n_points, float(index)),
                    run.timestamp,
                )
            )
            for index, run in enumerate(runs)
        ]
    )
    y = np.concatenate([run.delta_nu2 for run in runs])
    sigma = np.concatenate([run.sigma_delta_nu2 for run in runs])
    return FitData(x=x, y=y, sigma=sigma)


def _require_distinct_biases(runs: Sequence[MeasurementRun]) -> None:
    biases = np.unique(np.round(np.concatenate([run.v_c for run in runs]), 12))
    if biases.size < MIN_DISTINCT_BIASES:
        raise IdentifiabilityError(
            f"calibration needs {MIN_DISTINCT_BIASES} distinct bias voltages, got {biases.size}"
        )


def require_converged(fit: FitResult, what: str) -> FitResult:
    if not fit.converged:
        raise ConvergenceError(
            f"{what} did not converge after {fit.iterations} iterations",
            diagnostics={
                "fit": what,
                "iterations": fit.iterations,
                "chi2": fit.chi2,
                "dof": fit.dof,
                "parameters": dict(zip(fit.names, fit.parameters)),
            },
        )
    return fit


def fit_calibration_global(
    runs: Sequence[MeasurementRun],
    cfg: ApparatusConfig,
    *,
    v0_guess: float = 0.0,
    shared_offset: bool = True,
) -> CalibrationParams:
    """Fit {offset, d0, C_el, V0} jointly over the large-bias runs.

    With shared_offset=False each run gets its own offset; the reported
    offset is then their mean, with the covariance carried through.
    """
    _require_distinct_biases(runs)
    data = stack_runs(runs, cfg)
    layout = GlobalLayout(n_offsets=1 if shared_offset else len(runs))
    start = layout.linear_start(data, d0=0.0, v0=v0_guess)
    fit = require_converged(lm_fit(layout.model(), data, start), "electrostatic calibration")

    k = layout.n_offsets
    transform = np.zeros((4, layout.n_params))
    transform[0, :k] = 1.0 / k
    transform[1:, k:] = np.eye(3)
    values = transform @ fit.values
    cov = transform @ fit.cov @ transform.T
    cov = 0.5 * (cov + cov.T)

    if not values[2] > 0:
        raise ConvergenceError(
            "electrostatic calibration returned a non-positive C_el",
            diagnostics={"c_el": float(values[2])},
        )
    params = CalibrationParams(
        delta_nu2_offset=float(values[0]),
        d0=float(values[1]),
        c_el=float(values[2]),
        v0=float(values[3]),
        covariance=matrix_tuple(cov),
        run_offsets=tuple(float(v) for v in fit.values[:k]) if k > 1 else (),
        chi2=fit.chi2,
        dof=fit.dof,
        chi2_probability=fit.chi2_probability,
    )
    logger.info(
        "Calibration fitted | offset=%s d0=%s c_el=%s v0=%s chi2_prob=%s",
        params.delta_nu2_offset,
        params.d0,
        params.c_el,
        params.v0,
        params.chi2_probability,
    )
    return params
