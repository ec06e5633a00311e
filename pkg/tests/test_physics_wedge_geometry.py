import pytest
from scipy import integrate

from app.core.errors import ContactError
from app.physics.apparatus import ApparatusConfig, WedgeGeometry
from app.physics.constants import DEFAULT_CONSTANTS
from app.physics.models import frequency_shift_model
from app.physics.wedge import (
    tilt_capacitance,
    wedge_averaged_shift,
    wedge_shift_derivatives,
    wedge_shift_squared,
)
from app.simulator.capacitance import contact_limited_capacitance

C_CAS = 2.34e-28
WIDTH = 1.2e-3


def _local_average(d: float, deviation: float) -> float:
    theta = deviation / WIDTH
    value, _ = integrate.quad(
        lambda x: -C_CAS / (d + theta * x) ** 5, -WIDTH / 2, WIDTH / 2, epsabs=0.0, epsrel=1e-13
    )
    return value / WIDTH


def test_flat_wedge_reduces_to_plane_parallel_law() -> None:
    d = 0.7e-6

    assert wedge_averaged_shift(d, WedgeGeometry(), C_CAS) == pytest.approx(
        frequency_shift_model(d, 0.0, 0.0, C_CAS), rel=1e-14
    )


@pytest.mark.parametrize("d,deviation", [(0.5e-6, 30e-9), (0.8e-6, 100e-9), (1.5e-6, 400e-9)])
def test_wedge_average_matches_numerical_integration(d: float, deviation: float) -> None:
    geometry = WedgeGeometry.from_deviation(deviation, plate_width=WIDTH)

    assert wedge_averaged_shift(d, geometry, C_CAS) == pytest.approx(
        _local_average(d, deviation), rel=1e-9
    )


def test_wedge_depends_only_on_the_deviation_magnitude() -> None:
    left = WedgeGeometry.from_deviation(-80e-9)
    right = WedgeGeometry.from_deviation(80e-9)

    assert wedge_averaged_shift(0.6e-6, left, C_CAS) == pytest.approx(
        wedge_averaged_shift(0.6e-6, right, C_CAS), rel=1e-14
    )


def test_wedge_touching_raises_contact() -> None:
    with pytest.raises(ContactError):
        wedge_averaged_shift(1e-6, WedgeGeometry.from_deviation(2.5e-6), C_CAS)


def test_wedge_derivatives_match_central_differences() -> None:
    d, s = 0.6e-6, (60e-9) ** 2
    d_dd, d_ds, d_dc = wedge_shift_derivatives(d, s, C_CAS)

    hd, hs, hc = 1e-6 * d, 1e-4 * s, 1e-6 * C_CAS
    num_dd = (wedge_shift_squared(d + hd, s, C_CAS) - wedge_shift_squared(d - hd, s, C_CAS)) / (2 * hd)
    num_ds = (wedge_shift_squared(d, s + hs, C_CAS) - wedge_shift_squared(d, s - hs, C_CAS)) / (2 * hs)
    num_dc = (wedge_shift_squared(d, s, C_CAS + hc) - wedge_shift_squared(d, s, C_CAS - hc)) / (2 * hc)

    assert d_dd == pytest.approx(num_dd, rel=1e-6)
    assert d_ds == pytest.approx(num_ds, rel=1e-5)
    assert d_dc == pytest.approx(num_dc, rel=1e-8)


def test_negative_squared_deviation_is_finite_for_fits() -> None:
    value = wedge_shift_squared(0.6e-6, -(50e-9) ** 2, C_CAS)

    assert value < 0
    assert value > wedge_shift_squared(0.6e-6, 0.0, C_CAS)


def test_tilt_capacitance_matches_numerical_integration() -> None:
    d, deviation, length = 0.5e-6, 200e-9, 1.2e-3
    geometry = WedgeGeometry.from_deviation(deviation, plate_width=WIDTH, plate_length=length)
    theta = deviation / WIDTH
    value, _ = integrate.quad(
        lambda x: DEFAULT_CONSTANTS.epsilon0 * length / (d + theta * x),
        -WIDTH / 2,
        WIDTH / 2,
        epsabs=0.0,
        epsrel=1e-13,
    )

    assert tilt_capacitance(d, geometry) == pytest.approx(value, rel=1e-9)
    assert tilt_capacitance(d, WedgeGeometry()) == pytest.approx(
        DEFAULT_CONSTANTS.epsilon0 * WIDTH * length / d, rel=1e-14
    )


def test_contact_limited_capacitance_falls_with_tilt() -> None:
    cfg = ApparatusConfig()

    flat = contact_limited_capacitance(cfg, 0.0, 0.0, 0.4e-6)
    small = contact_limited_capacitance(cfg, 1e-4, 0.0, 0.4e-6)
    large = contact_limited_capacitance(cfg, 2e-4, 0.0, 0.4e-6)
    both = contact_limited_capacitance(cfg, 1e-4, -1e-4, 0.4e-6)

    assert flat > small > large
    assert small > both
    assert flat == pytest.approx(31.9e-12, rel=0.01)


def test_contact_limited_capacitance_rejects_zero_gap() -> None:
    with pytest.raises(ContactError):
        contact_limited_capacitance(ApparatusConfig(), 0.0, 0.0, 0.0)
