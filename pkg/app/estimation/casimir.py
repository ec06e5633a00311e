"""Casimir-term fits on electrostatically subtracted runs.

Two ways of carrying the calibration uncertainty are supported:

* ``effective_variance`` (default): the law alone is fitted, each point
  weighted by sigma_res^2 + (dm/dd)^2 sigma_d0^2 and iterated until the law
  parameters settle. The reported covariance is that of the weighted
  estimator: measurement noise point by point, plus the full calibration
  covariance pushed through the estimator's linear response, so the shared
  gap offset stays correlated across points.
* ``joint``: the calibration parameters are refitted together with the
  Casimir law, constrained by their calibration covariance as a Gaussian
  prior.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.core.errors import DataError, DegeneracyError, DomainError, FitError
from app.estimation.calibration import require_converged
from app.estimation.lm import FitData, ModelFunction, lm_fit
from app.estimation.propagation import ResidualRun, propagate_kc
from app.estimation.results import CasimirFit, ExponentFit, FitResult, SelectionStep, WedgeFit
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants
from app.physics.params import CalibrationParams, CasimirParams
from app.physics.wedge import wedge_shift_derivatives, wedge_shift_squared

logger = logging.getLogger(__name__)

Propagation = Literal["effective_variance", "joint"]

DEFAULT_PROPAGATION: Propagation = "effective_variance"
DEFAULT_CASIMIR_POINTS = 9
MIN_SCAN_POINTS = 5
REFERENCE_GAP = 1e-6  # m
EFFECTIVE_VARIANCE_MAX_ITER = 20
EFFECTIVE_VARIANCE_RTOL = 1e-10

ShiftEvaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
ShiftPartials = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class ShiftLaw:
    """Distance law m(d, q) with partials (dm/dq of shape (n, k), dm/dd)."""

    names: tuple[str, ...]
    evaluate: ShiftEvaluator
    partials: ShiftPartials

    @property
    def n_params(self) -> int:
        return len(self.names)


def _power5(d: np.ndarray, q: np.ndarray) -> np.ndarray:
    return -q[0] / d**5


def _power5_partials(d: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return (-1.0 / d**5)[:, None], 5.0 * q[0] / d**6


def _free_power(d: np.ndarray, q: np.ndarray) -> np.ndarray:
    return -q[0] * (REFERENCE_GAP / d) ** q[1]


def _free_power_partials(d: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    amplitude, exponent = q
    ratio = (REFERENCE_GAP / d) ** exponent
    d_amplitude = -ratio
    d_exponent = -amplitude * ratio * np.log(REFERENCE_GAP / d)
    return np.column_stack((d_amplitude, d_exponent)), amplitude * exponent * ratio / d


def _wedge(d: np.ndarray, q: np.ndarray) -> np.ndarray:
    c_cas, s = q
    return np.array([wedge_shift_squared(float(g), float(s), float(c_cas)) for g in d])


def _wedge_partials(d: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c_cas, s = q
    rows = np.array([wedge_shift_derivatives(float(g), float(s), float(c_cas)) for g in d])
    d_dd, d_ds, d_dc = rows[:, 0], rows[:, 1], rows[:, 2]
    return np.column_stack((d_dc, d_ds)), d_dd


CASIMIR_LAW = ShiftLaw(names=("c_cas",), evaluate=_power5, partials=_power5_partials)
FREE_EXPONENT_LAW = ShiftLaw(
    names=("amplitude", "exponent"), evaluate=_free_power, partials=_free_power_partials
)
WEDGE_LAW = ShiftLaw(names=("c_cas", "deviation_squared"), evaluate=_wedge, partials=_wedge_partials)


def _law_model(law: ShiftLaw) -> ModelFunction:
    return ModelFunction(
        func=law.evaluate,
        n_params=law.n_params,
        jacobian=lambda d, q: law.partials(d, q)[0],
        names=law.names,
    )


def _joint_model(res: ResidualRun, law: ShiftLaw, prior_inverse: np.ndarray) -> ModelFunction:
    """Measured shifts plus whitened calibration pseudo-points.

    Parameters are [law..., offset, d0, C_el, V0]; rows past the run are the
    calibration prior.
    """
    k = law.n_params
    n = res.n_points

    def evaluate(_: np.ndarray, p: np.ndarray) -> np.ndarray:
        offset, d0, c_el, v0 = p[k:]
        d = res.d_r + d0
        shifts = -offset - c_el * (res.v_c - v0) ** 2 / d**3 + law.evaluate(d, p[:k])
        return np.concatenate((shifts, prior_inverse @ p[k:]))

    def jacobian(_: np.ndarray, p: np.ndarray) -> np.ndarray:
        offset, d0, c_el, v0 = p[k:]
        d = res.d_r + d0
        v_r = res.v_c - v0
        d_law, dm_dd = law.partials(d, p[:k])
        jac = np.zeros((n + 4, k + 4))
        jac[:n, :k] = d_law
        jac[:n, k] = -1.0
        jac[:n, k + 1] = 3.0 * c_el * v_r**2 / d**4 + dm_dd
        jac[:n, k + 2] = -(v_r**2) / d**3
        jac[:n, k + 3] = 2.0 * c_el * v_r / d**3
        jac[n:, k:] = prior_inverse
        return jac

    return ModelFunction(
        func=evaluate,
        n_params=k + 4,
        jacobian=jacobian,
        names=law.names + CalibrationParams.NAMES,
    )


D0_INDEX = CalibrationParams.NAMES.index("d0")
C_EL_INDEX = CalibrationParams.NAMES.index("c_el")

LawFit = tuple[FitResult, np.ndarray]


def _fit_joint(res: ResidualRun, law: ShiftLaw, start: np.ndarray) -> LawFit:
    """Returns the fit and cov(law parameters, calibration), shape (k, 4)."""
    cal = res.calibration
    k = law.n_params
    if not np.any(cal.cov):
        data = FitData(x=res.gap, y=res.residual, sigma=res.sigma_measured)
        return lm_fit(_law_model(law), data, start), np.zeros((k, 4))
    try:
        lower = np.linalg.cholesky(cal.cov)
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError("calibration covariance is not positive definite") from exc
    prior_inverse = np.linalg.inv(lower)
    data = FitData(
        x=np.arange(res.n_points + 4, dtype=float),
        y=np.concatenate((res.delta_nu2, prior_inverse @ cal.values)),
        sigma=np.concatenate((res.sigma_measured, np.ones(4))),
    )
    fit = lm_fit(_joint_model(res, law, prior_inverse), data, np.concatenate((start, cal.values)))
    return fit, fit.cov[:k, k:]


def _propagated(res: ResidualRun, law: ShiftLaw, fit: FitResult, sigma_eff: np.ndarray) -> LawFit:
    """Sandwich covariance of the effective-variance estimator at its weights."""
    d_law, dm_dd = law.partials(res.gap, fit.values)
    weighted = d_law / sigma_eff[:, None] ** 2
    gain = np.linalg.solve(d_law.T @ weighted, weighted.T)
    response = res.gradients.copy()
    response[:, D0_INDEX] -= dm_dd
    sensitivity = gain @ response
    cross = sensitivity @ res.calibration.cov
    total = (gain * res.sigma_measured**2) @ gain.T + cross @ sensitivity.T
    return fit.with_covariance(0.5 * (total + total.T)), cross


def _fit_effective_variance(res: ResidualRun, law: ShiftLaw, start: np.ndarray) -> LawFit:
    q = np.asarray(start, dtype=float)
    model = _law_model(law)
    fit: FitResult | None = None
    sigma_eff = res.sigma_residual
    for _ in range(EFFECTIVE_VARIANCE_MAX_ITER):
        _, dm_dd = law.partials(res.gap, q)
        sigma_eff = np.sqrt(res.sigma_residual**2 + (dm_dd * res.sigma_gap) ** 2)
        fit = lm_fit(model, FitData(x=res.gap, y=res.residual, sigma=sigma_eff), q)
        settled = np.all(np.abs(fit.values - q) <= EFFECTIVE_VARIANCE_RTOL * (np.abs(q) + 1e-300))
        q = fit.values
        if settled:
            break
    return _propagated(res, law, fit, sigma_eff)


def _fit_law(
    res: ResidualRun, law: ShiftLaw, start: np.ndarray, propagation: Propagation
) -> LawFit:
    if propagation == "effective_variance":
        return _fit_effective_variance(res, law, start)
    if propagation == "joint":
        return _fit_joint(res, law, start)
    raise DomainError(f"unknown propagation mode {propagation!r}")


def _linear_casimir_start(res: ResidualRun) -> float:
    a = 1.0 / res.gap**5
    w = 1.0 / res.sigma_residual**2
    return float(-np.sum(w * a * res.residual) / np.sum(w * a * a))


def _select(res: ResidualRun, n_points: int, minimum: int) -> ResidualRun:
    if n_points < minimum:
        raise DataError(f"at least {minimum} points are needed, {n_points} requested")
    return res.smallest(n_points)


def casimir_selection_scan(
    residuals: ResidualRun,
    propagation: Propagation = DEFAULT_PROPAGATION,
    *,
    min_points: int = MIN_SCAN_POINTS,
) -> tuple[SelectionStep, ...]:
    """chi2 probability of the d^-5 fit over the n smallest gaps, n = min_points..N."""
    steps = []
    for n in range(max(2, min_points), residuals.n_points + 1):
        subset = residuals.smallest(n)
        try:
            fit, _ = _fit_law(subset, CASIMIR_LAW, np.array([_linear_casimir_start(subset)]), propagation)
        except FitError:
            logger.warning("Selection scan fit failed | label=%s n=%s", residuals.label, n)
            continue
        steps.append(
            SelectionStep(
                n_points=n,
                c_cas=fit.parameters[0],
                sigma_c_cas=float(fit.errors[0]),
                chi2=fit.chi2,
                chi2_probability=fit.chi2_probability,
            )
        )
    return tuple(steps)


def best_point_count(selection: tuple[SelectionStep, ...]) -> int:
    """Point count with the largest chi2 probability.

    Ranked by the lower tail, which stays resolved where the probability
    itself rounds to one; the first of equal counts wins.
    """
    if not selection:
        raise DataError("the point-count scan is empty")
    return min(selection, key=lambda step: step.chi2_lower_tail).n_points


def fit_casimir(
    residuals: ResidualRun,
    n_points: int | None = None,
    *,
    propagation: Propagation = DEFAULT_PROPAGATION,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> CasimirFit:
    """One-parameter -C_Cas/d^5 fit over the smallest gaps.

    By default the point count comes from the selection scan. A non-positive
    C_Cas is reported with attractive=False.
    """
    selection = casimir_selection_scan(residuals, propagation)
    if n_points is None:
        if not selection:
            raise DataError(f"run {residuals.label!r} is too short for the point-count scan")
        n_points = best_point_count(selection)
    subset = _select(residuals, n_points, 2)

    fit, cross = _fit_law(subset, CASIMIR_LAW, np.array([_linear_casimir_start(subset)]), propagation)
    fit = require_converged(fit, "Casimir fit")
    c_cas = fit.parameters[0]
    sigma_c_cas = float(fit.errors[0])
    cal = residuals.calibration
    pair = np.array(
        [[sigma_c_cas**2, cross[0, C_EL_INDEX]], [cross[0, C_EL_INDEX], cal.sigma("c_el") ** 2]]
    )
    kc, sigma_kc = propagate_kc(c_cas, cal.c_el, pair, constants)

    attractive = c_cas > 0
    if not attractive:
        logger.warning(
            "Casimir coefficient is not attractive | label=%s c_cas=%s sigma=%s",
            residuals.label,
            c_cas,
            sigma_c_cas,
        )
    params = CasimirParams(
        c_cas=c_cas,
        sigma_c_cas=sigma_c_cas,
        kc=kc,
        sigma_kc=sigma_kc,
        n_points=n_points,
        chi2_probability=fit.chi2_probability,
        attractive=attractive,
    )
    logger.info(
        "Casimir fitted | label=%s n=%s c_cas=%s kc=%s sigma_kc=%s chi2_prob=%s",
        residuals.label,
        n_points,
        c_cas,
        kc,
        sigma_kc,
        fit.chi2_probability,
    )
    return CasimirFit(params=params, fit=fit, selection=selection, propagation=propagation)


def _log_log_start(res: ResidualRun) -> np.ndarray:
    below = res.residual < 0
    if np.count_nonzero(below) >= 2:
        slope, intercept = np.polyfit(
            np.log(REFERENCE_GAP / res.gap[below]), np.log(-res.residual[below]), 1
        )
        return np.array([math.exp(intercept), slope])
    return np.array([_linear_casimir_start(res) / REFERENCE_GAP**5, 5.0])


def fit_free_exponent(
    residuals: ResidualRun,
    n_points: int = DEFAULT_CASIMIR_POINTS,
    *,
    propagation: Propagation = DEFAULT_PROPAGATION,
) -> ExponentFit:
    """Two-parameter -B/d^n fit; B is returned in Hz^2 m^n."""
    subset = _select(residuals, n_points, 3)
    fit = require_converged(
        _fit_law(subset, FREE_EXPONENT_LAW, _log_log_start(subset), propagation)[0],
        "free-exponent fit",
    )
    amplitude, exponent = fit.parameters[0], fit.parameters[1]
    amplitude_si = amplitude * REFERENCE_GAP**exponent
    gradient = np.array(
        [REFERENCE_GAP**exponent, amplitude_si * math.log(REFERENCE_GAP)]
    )
    sigma_amplitude = math.sqrt(max(float(gradient @ fit.cov[:2, :2] @ gradient), 0.0))
    return ExponentFit(
        exponent=exponent,
        sigma_exponent=float(fit.errors[1]),
        amplitude=amplitude_si,
        sigma_amplitude=sigma_amplitude,
        fit=fit,
    )


def fit_wedge_deviation(
    residuals: ResidualRun,
    n_points: int = DEFAULT_CASIMIR_POINTS,
    *,
    propagation: Propagation = DEFAULT_PROPAGATION,
) -> WedgeFit:
    """Casimir fit with the plate non-parallelism free, in s = (theta W)^2."""
    subset = _select(residuals, n_points, 3)
    start = np.array([_linear_casimir_start(subset), 0.0])
    fit = require_converged(_fit_law(subset, WEDGE_LAW, start, propagation)[0], "wedge fit")
    c_cas, s = fit.parameters[0], fit.parameters[1]
    sigma_s = float(fit.errors[1])
    floor = math.sqrt(max(s, 0.0))
    return WedgeFit(
        deviation=floor,
        sigma_deviation=math.sqrt(max(s, 0.0) + sigma_s) - floor,
        deviation_squared=s,
        sigma_deviation_squared=sigma_s,
        c_cas=c_cas,
        sigma_c_cas=float(fit.errors[0]),
        fit=fit,
    )
