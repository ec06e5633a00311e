"""Closed-form laws of the parallel-plate resonator.

Every function is pure and works in SI units (volts, metres, Hz^2).
"""

from __future__ import annotations

import math

from app.core.errors import ContactError, DomainError
from app.physics.apparatus import ApparatusConfig
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants


def _require_gap(d: float) -> None:
    if not d > 0:
        raise DomainError(f"gap must be positive, got {d!r}")


def kc_theory(constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return constants.kc_theory()


def casimir_pressure(d: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Ideal Casimir pressure K_C/d^4 [Pa]."""
    _require_gap(d)
    return constants.kc_theory() / d**4


def deflection_coefficient(d: float, cfg: ApparatusConfig) -> float:
    """K_i = eps0 S / (8 pi^2 m_eff nu0^2 d^2) [m/V^2]."""
    _require_gap(d)
    return (
        DEFAULT_CONSTANTS.epsilon0
        * cfg.plate_area
        / (8.0 * math.pi**2 * cfg.effective_mass * cfg.free_frequency**2 * d**2)
    )


def effective_mass_from_deflection(k_i: float, d: float, cfg: ApparatusConfig) -> float:
    """Invert K_i for m_eff."""
    _require_gap(d)
    if not k_i > 0:
        raise DomainError(f"deflection coefficient must be positive, got {k_i!r}")
    return (
        DEFAULT_CONSTANTS.epsilon0
        * cfg.plate_area
        / (8.0 * math.pi**2 * k_i * cfg.free_frequency**2 * d**2)
    )


def static_deflection(v_c: float, d: float, cfg: ApparatusConfig) -> float:
    """Static bending K_i (V_c - V0)^2 of the resonator top edge [m]."""
    v_r = v_c - cfg.offset_voltage
    return deflection_coefficient(d, cfg) * v_r * v_r


def frequency_shift_model(d: float, v_r: float, c_el: float, c_cas: float) -> float:
    """Squared-frequency shift nu^2 - nu0^2 from the residual bias and Casimir terms."""
    _require_gap(d)
    return -c_el * v_r * v_r / d**3 - c_cas / d**5


def gap_distance(v_pzt: float, d_s: float, cfg: ApparatusConfig, d0: float) -> float:
    """Actual gap d = d_r0 - A V_PZT - d_s + d0 [m]."""
    d = cfg.reference_distance - cfg.actuation_coefficient * v_pzt - d_s + d0
    if not d > 0:
        raise ContactError(f"plates in contact at V_PZT={v_pzt!r} V (gap {d!r} m)")
    return d


def kc_from_coefficients(
    c_cas: float,
    c_el: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """K_C = (eps0/4) C_Cas / C_el [N m^2]."""
    if not c_el > 0:
        raise DomainError(f"C_el must be positive, got {c_el!r}")
    return constants.epsilon0 / 4.0 * c_cas / c_el


def attractive_force(
    d: float, v_r: float, cfg: ApparatusConfig, *, casimir_kc: float | None = None
) -> float:
    """Magnitude of the electrostatic plus Casimir attraction [N]."""
    _require_gap(d)
    kc = cfg.casimir_kc if casimir_kc is None else casimir_kc
    eps0 = DEFAULT_CONSTANTS.epsilon0
    return eps0 * cfg.plate_area * v_r * v_r / (2.0 * d * d) + kc * cfg.plate_area / d**4


def attractive_force_gradient(
    d: float, v_r: float, cfg: ApparatusConfig, *, casimir_kc: float | None = None
) -> float:
    """dF/dd of the attraction magnitude; negative (force grows as d shrinks)."""
    _require_gap(d)
    kc = cfg.casimir_kc if casimir_kc is None else casimir_kc
    eps0 = DEFAULT_CONSTANTS.epsilon0
    return -eps0 * cfg.plate_area * v_r * v_r / d**3 - 4.0 * kc * cfg.plate_area / d**5


def nominal_gap_for(
    gap: float, v_r: float, cfg: ApparatusConfig, *, casimir_kc: float | None = None
) -> float:
    """Nominal gap whose static equilibrium under the attraction sits at ``gap``.

    The equilibrium is d_nominal = d + F(d)/k; it is stable only while the
    force gradient stays below the stiffness.
    """
    stiffness = cfg.stiffness
    if -attractive_force_gradient(gap, v_r, cfg, casimir_kc=casimir_kc) >= stiffness:
        raise ContactError(f"no stable equilibrium at gap {gap!r} m: snap-in")
    return gap + attractive_force(gap, v_r, cfg, casimir_kc=casimir_kc) / stiffness
