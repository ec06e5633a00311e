from app.estimation.calibration import fit_calibration_global
from app.estimation.casimir import (
    best_point_count,
    casimir_selection_scan,
    fit_casimir,
    fit_free_exponent,
    fit_wedge_deviation,
)
from app.estimation.chi2 import chi2_probability
from app.estimation.drift import fit_with_drift
from app.estimation.lm import FitData, LMOptions, ModelFunction, check_jacobian, lm_fit
from app.estimation.lorentzian import fit_lorentzian
from app.estimation.propagation import ResidualRun, propagate_kc, subtract_electrostatic
from app.estimation.results import (
    CasimirFit,
    DriftFit,
    ExponentFit,
    FitResult,
    LorentzianParams,
    SelectionStep,
    WedgeFit,
)

__all__ = [
    "fit_calibration_global",
    "best_point_count",
    "casimir_selection_scan",
    "fit_casimir",
    "fit_free_exponent",
    "fit_wedge_deviation",
    "chi2_probability",
    "fit_with_drift",
    "FitData",
    "LMOptions",
    "ModelFunction",
    "check_jacobian",
    "lm_fit",
    "fit_lorentzian",
    "ResidualRun",
    "propagate_kc",
    "subtract_electrostatic",
    "CasimirFit",
    "DriftFit",
    "ExponentFit",
    "FitResult",
    "LorentzianParams",
    "SelectionStep",
    "WedgeFit",
]
