import math

import numpy as np
import pytest
from scipy import constants

from app.core.errors import ContactError, DomainError
from app.estimation.propagation import propagate_kc
from app.physics.apparatus import ApparatusConfig, silicon_beam_mass
from app.physics.constants import DEFAULT_CONSTANTS
from app.physics.models import (
    casimir_pressure,
    deflection_coefficient,
    effective_mass_from_deflection,
    frequency_shift_model,
    gap_distance,
    kc_from_coefficients,
    nominal_gap_for,
    static_deflection,
)
from app.physics.published import published


def test_kc_from_published_coefficients_matches_published_kc() -> None:
    kc = kc_from_coefficients(2.34e-28, 4.24e-13)

    assert kc == pytest.approx(1.22e-27, rel=1e-2)


def test_uncorrelated_published_errors_give_published_kc_sigma() -> None:
    cov = np.diag([0.34e-28**2, 0.11e-13**2])

    kc, sigma = propagate_kc(2.34e-28, 4.24e-13, cov)

    assert kc == pytest.approx(1.2216e-27, rel=1e-3)
    assert sigma == pytest.approx(0.18e-27, rel=0.05)


def test_ideal_conductor_kc() -> None:
    assert DEFAULT_CONSTANTS.kc_theory() == pytest.approx(1.30e-27, rel=1e-2)
    assert DEFAULT_CONSTANTS.kc_theory() == pytest.approx(
        math.pi * 6.62607015e-34 * 299792458.0 / 480.0, rel=1e-12
    )


def test_frequency_shift_terms_at_three_microns() -> None:
    electrostatic = frequency_shift_model(3e-6, 77.0e-3, 4.24e-13, 0.0)
    casimir = frequency_shift_model(3e-6, 0.0, 4.24e-13, 2.34e-28)

    assert electrostatic == pytest.approx(-4.24e-13 * 77.0e-3**2 / 27e-18, rel=1e-12)
    assert electrostatic == pytest.approx(-93.1, abs=0.1)
    assert casimir == pytest.approx(-0.963, abs=1e-3)


@pytest.mark.parametrize("gap", [0.0, -1e-7, float("nan")])
def test_frequency_shift_rejects_non_positive_gap(gap: float) -> None:
    with pytest.raises(DomainError):
        frequency_shift_model(gap, 0.1, 4.24e-13, 2.34e-28)


def test_gap_distance_raises_contact_past_the_plate() -> None:
    cfg = ApparatusConfig()
    touching = (cfg.reference_distance + cfg.distance_correction) / cfg.actuation_coefficient

    with pytest.raises(ContactError):
        gap_distance(touching + 1.0, 0.0, cfg, cfg.distance_correction)


def test_default_apparatus_reproduces_published_coefficients() -> None:
    cfg = ApparatusConfig()

    assert cfg.electrostatic_coefficient == pytest.approx(
        published("electrostatic_coefficient").value, rel=1e-12
    )
    assert cfg.casimir_coefficient == pytest.approx(
        published("casimir_coefficient").value, rel=1e-12
    )
    assert cfg.effective_mass / cfg.physical_mass == pytest.approx(0.305, abs=0.005)


def test_silicon_beam_mass() -> None:
    assert silicon_beam_mass(1.9e-2, 1.2e-3, 47e-6) == pytest.approx(2.4968e-6, rel=1e-4)

    with pytest.raises(ValueError):
        silicon_beam_mass(1.9e-2, 0.0, 47e-6)


def test_effective_mass_inverts_the_deflection_coefficient() -> None:
    cfg = ApparatusConfig()

    for d in (3e-6, 4e-6, 5e-6, 6e-6):
        k_i = deflection_coefficient(d, cfg)
        assert effective_mass_from_deflection(k_i, d, cfg) == pytest.approx(
            cfg.effective_mass, rel=1e-12
        )


def test_static_deflection_vanishes_at_the_offset_voltage() -> None:
    cfg = ApparatusConfig()

    assert static_deflection(cfg.offset_voltage, 3e-6, cfg) == 0.0
    assert static_deflection(0.0, 3e-6, cfg) > 0.0


def test_apparatus_rejects_effective_mass_above_physical() -> None:
    with pytest.raises(ValueError):
        ApparatusConfig(effective_mass=3e-6)


def test_casimir_pressure_follows_the_ideal_plate_law() -> None:
    expected = math.pi**2 * constants.hbar * constants.c / (240.0 * (1e-6) ** 4)

    assert casimir_pressure(1e-6) == pytest.approx(expected, rel=1e-9)
    assert casimir_pressure(1e-6) == pytest.approx(1.30e-3, rel=0.01)
    assert casimir_pressure(0.5e-6) == pytest.approx(16 * casimir_pressure(1e-6), rel=1e-12)
    with pytest.raises(DomainError):
        casimir_pressure(0.0)


def test_nominal_gap_adds_the_static_bending_at_equilibrium() -> None:
    cfg = ApparatusConfig()

    nominal = nominal_gap_for(0.5e-6, 0.0, cfg)

    assert nominal == pytest.approx(0.549e-6, abs=2e-9)
    assert nominal_gap_for(0.5e-6, 0.0, cfg, casimir_kc=0.0) == 0.5e-6


def test_nominal_gap_past_the_snap_in_point_is_contact() -> None:
    with pytest.raises(ContactError):
        nominal_gap_for(0.35e-6, 0.0, ApparatusConfig())
