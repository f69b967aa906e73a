"""Exception hierarchy shared by every module."""


class WaveDecayError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class InvalidInputError(WaveDecayError, ValueError):
    pass


class NormOverflowError(WaveDecayError, OverflowError):
    def __init__(self, message: str, index: int, x: float):
        super().__init__(f"{message} (grid index {index}, x = {x:.6g})")
        self.index = index
        self.x = x


class DegenerateProfileError(WaveDecayError, ValueError):
    pass


class NoMonotoneProfileError(WaveDecayError):
    def __init__(self, message: str, *, point: float | None = None, threshold: float | None = None):
        super().__init__(message)
        self.point = point
        self.threshold = threshold


class MonotonicityViolationError(WaveDecayError):
    pass


class NumericalBlowupError(WaveDecayError):
    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class InstabilityError(NumericalBlowupError):
    pass


class ResolutionError(WaveDecayError):
    pass


class DomainCoverageError(WaveDecayError):
    pass


class CertificateError(WaveDecayError, ValueError):
    pass


class FitDomainError(WaveDecayError, ValueError):
    pass


class HypothesisViolationError(WaveDecayError, ValueError):
    pass


class ConfigError(WaveDecayError):
    """Schema or validation failure; carries the dotted key path."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
