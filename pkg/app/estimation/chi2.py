from __future__ import annotations

import math

from scipy import special

from app.core.errors import DomainError


def chi2_probability(chi2: float, dof: int) -> float:
    """Upper-tail probability Q(chi2 | dof) of the chi-square distribution."""
    if not math.isfinite(chi2) or chi2 < 0:
        raise DomainError(f"chi2 must be finite and non-negative, got {chi2!r}")
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof!r}")
    if chi2 == 0:
        return 1.0
    return float(special.gammaincc(0.5 * dof, 0.5 * chi2))


def chi2_lower_tail(chi2: float, dof: int) -> float:
    """P(chi2 | dof) = 1 - Q; keeps resolution where Q rounds to one."""
    if not math.isfinite(chi2) or chi2 < 0:
        raise DomainError(f"chi2 must be finite and non-negative, got {chi2!r}")
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof!r}")
    return float(special.gammainc(0.5 * dof, 0.5 * chi2))
