from app.physics.apparatus import ApparatusConfig, WedgeGeometry, silicon_beam_mass
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants
from app.physics.models import (
    casimir_pressure,
    frequency_shift_model,
    gap_distance,
    kc_from_coefficients,
    static_deflection,
)
from app.physics.params import CalibrationParams, CasimirParams
from app.physics.wedge import tilt_capacitance, wedge_averaged_shift

__all__ = [
    "ApparatusConfig",
    "WedgeGeometry",
    "silicon_beam_mass",
    "DEFAULT_CONSTANTS",
    "PhysicalConstants",
    "casimir_pressure",
    "frequency_shift_model",
    "gap_distance",
    "kc_from_coefficients",
    "static_deflection",
    "CalibrationParams",
    "CasimirParams",
    "tilt_capacitance",
    "wedge_averaged_shift",
]
