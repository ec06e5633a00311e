from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from app.core.errors import ConfigurationError
from app.estimation.calibration import GlobalLayout, require_converged, stack_runs
from app.estimation.lm import lm_fit
from app.estimation.propagation import propagate_kc
from app.estimation.results import DriftFit, matrix_tuple
from app.physics.apparatus import ApparatusConfig
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants
from app.physics.params import CalibrationParams, CasimirParams
from app.simulator.records import MeasurementRun

logger = logging.getLogger(__name__)


def fit_with_drift(
    runs: Sequence[MeasurementRun],
    cfg: ApparatusConfig,
    *,
    v0_guess: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> tuple[CalibrationParams, CasimirParams, DriftFit]:
    """Global fit of every run with a Casimir term and a shift drifting linearly in time.

    The same fit without the drift term is reported alongside for comparison.
    """
    for run in runs:
        if run.timestamp.size != run.n_points or np.any(~np.isfinite(run.timestamp)):
            raise ConfigurationError(f"run {run.label!r} lacks timestamps for the drift fit")
    data = stack_runs(runs, cfg)

    drifting = GlobalLayout(casimir=True, drift=True)
    steady = GlobalLayout(casimir=True, drift=False)
    fit = require_converged(
        lm_fit(drifting.model(), data, drifting.linear_start(data, d0=0.0, v0=v0_guess)),
        "drift-augmented global fit",
    )
    fit_without = require_converged(
        lm_fit(steady.model(), data, steady.linear_start(data, d0=0.0, v0=v0_guess)),
        "global fit without drift",
    )

    cal_index = [drifting.index(name) for name in CalibrationParams.NAMES]
    cov = fit.cov
    cal = CalibrationParams(
        delta_nu2_offset=fit.value("delta_nu2_offset"),
        d0=fit.value("d0"),
        c_el=fit.value("c_el"),
        v0=fit.value("v0"),
        covariance=matrix_tuple(cov[np.ix_(cal_index, cal_index)]),
        chi2=fit.chi2,
        dof=fit.dof,
        chi2_probability=fit.chi2_probability,
    )
    pair_index = [drifting.index("c_cas"), drifting.index("c_el")]
    kc, sigma_kc = propagate_kc(
        fit.value("c_cas"), cal.c_el, cov[np.ix_(pair_index, pair_index)], constants
    )
    casimir = CasimirParams(
        c_cas=fit.value("c_cas"),
        sigma_c_cas=fit.sigma("c_cas"),
        kc=kc,
        sigma_kc=sigma_kc,
        drift_rate=fit.value("drift_rate"),
        sigma_drift_rate=fit.sigma("drift_rate"),
        n_points=data.n_points,
        chi2_probability=fit.chi2_probability,
        attractive=fit.value("c_cas") > 0,
    )
    drift = DriftFit(
        drift_rate=fit.value("drift_rate"),
        sigma_drift_rate=fit.sigma("drift_rate"),
        fit=fit,
        fit_without_drift=fit_without,
    )
    logger.info(
        "Drift fit done | kc=%s sigma_kc=%s rate=%s chi2_prob=%s chi2_prob_no_drift=%s",
        kc,
        sigma_kc,
        drift.drift_rate,
        drift.chi2_probability,
        drift.chi2_probability_without_drift,
    )
    return cal, casimir, drift
