from __future__ import annotations


class CasimirTwinError(Exception):
    exit_code = 1


class ConfigurationError(CasimirTwinError):
    exit_code = 2


class DomainError(CasimirTwinError, ValueError):
    exit_code = 2


class ContactError(DomainError):
    """Plates touched or snapped in."""

    exit_code = 3


class DataError(CasimirTwinError):
    exit_code = 4


class IdentifiabilityError(DataError):
    pass


class DetectionError(DataError):
    pass


class GeometryError(DataError):
    pass


class FitError(CasimirTwinError):
    exit_code = 5


class DegeneracyError(FitError):
    pass


class ConvergenceError(FitError):
    def __init__(self, message: str, *, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, CasimirTwinError):
        return exc.exit_code
    return 1
