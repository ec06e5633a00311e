"""Non-parallel (wedge) plate corrections.

The local plane-parallel law is averaged uniformly across the plate width for
a gap varying linearly from d - thetaW/2 to d + thetaW/2. Both averages have
closed forms; they are written in the squared deviation s = (thetaW)^2, which
keeps them finite and cancellation-free as the tilt goes to zero.
"""

from __future__ import annotations

import math

from app.core.errors import ContactError, DomainError
from app.physics.apparatus import WedgeGeometry
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants


def _check_wedge_contact(d: float, deviation: float) -> None:
    if not d > 0:
        raise DomainError(f"gap must be positive, got {d!r}")
    if not d - abs(deviation) / 2.0 > 0:
        raise ContactError(
            f"wedge touches: mean gap {d!r} m with deviation {deviation!r} m"
        )


def wedge_shift_squared(d: float, s: float, c_cas: float) -> float:
    """Wedge-averaged Casimir shift as a function of s = deviation^2.

    Negative s is the analytic continuation used by fits; the contact check is
    applied only for s >= 0.
    """
    if s >= 0:
        _check_wedge_contact(d, math.sqrt(s))
    numerator = d * (2.0 * d * d + 0.5 * s)
    denominator = 2.0 * (d * d - 0.25 * s) ** 4
    return -c_cas * numerator / denominator


def wedge_shift_derivatives(d: float, s: float, c_cas: float) -> tuple[float, float, float]:
    """Partial derivatives of wedge_shift_squared with respect to (d, s, c_cas)."""
    q = d * d - 0.25 * s
    numerator = d * (2.0 * d * d + 0.5 * s)
    denominator = 2.0 * q**4
    dn_dd = 6.0 * d * d + 0.5 * s
    dden_dd = 16.0 * d * q**3
    dn_ds = 0.5 * d
    dden_ds = -2.0 * q**3
    d_dd = -c_cas * (dn_dd * denominator - numerator * dden_dd) / denominator**2
    d_ds = -c_cas * (dn_ds * denominator - numerator * dden_ds) / denominator**2
    d_dc = -numerator / denominator
    return d_dd, d_ds, d_dc


def wedge_averaged_shift(d: float, geometry: WedgeGeometry, c_cas: float) -> float:
    """-(C_Cas/W) * integral over the width of the local d^-5 law."""
    deviation = geometry.deviation
    _check_wedge_contact(d, deviation)
    return wedge_shift_squared(d, deviation * deviation, c_cas)


def _atanh_ratio(x: float) -> float:
    if abs(x) < 1e-4:
        x2 = x * x
        return 1.0 + x2 / 3.0 + x2 * x2 / 5.0
    return math.atanh(x) / x


def tilt_capacitance(
    d: float,
    geometry: WedgeGeometry,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    *,
    stray: float = 0.0,
) -> float:
    """Capacitance [F] of a wedge with mean gap d.

    eps0 L (1/theta) ln[(d + thetaW/2)/(d - thetaW/2)], plus an optional stray term.
    """
    deviation = geometry.deviation
    _check_wedge_contact(d, deviation)
    flat = constants.epsilon0 * geometry.plate_length * geometry.plate_width / d
    return flat * _atanh_ratio(deviation / (2.0 * d)) + stray
