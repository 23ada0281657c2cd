"""Exception types shared across the package."""


class MGError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MGError):
    """Invalid configuration (bad sizes, densities, windows)."""


class MeasurementError(MGError):
    """A measurement window is too short or otherwise unusable."""


class NotSaturatedError(MeasurementError):
    """Tail window still shows a significant trend; no permanent level yet."""


class UndefinedRatioError(MeasurementError):
    """Execution-cost ratio requested where the denominator is consistent with zero."""


class SymmetricPhaseError(MGError):
    """Requested a finite-susceptibility solution beyond the critical speculator density."""
