class FhnLevyError(Exception):
    """Base class for all package errors."""


class DomainError(FhnLevyError, ValueError):
    """An argument is outside the domain an operation accepts."""


class GridAlignmentError(DomainError):
    """A time is not a node of the sampling grid."""


class InsufficientDataError(DomainError):
    """Window or sample too short for a statistic."""


class OverflowDiagnostic(FhnLevyError, ArithmeticError):
    """|xi| exceeded the exp() guard; the path or truncation is pathological."""


class StepSizeError(FhnLevyError):
    """Explicit stability bound violated."""

    def __init__(self, msg, suggested_dt=None):
        super().__init__(msg)
        self.suggested_dt = suggested_dt


class BlowUpError(FhnLevyError, ArithmeticError):
    """Energy exceeded the blow-up threshold or became non-finite."""

    def __init__(self, msg, seed=None, t=None):
        super().__init__(msg if seed is None else f"{msg} (seed={seed})")
        self.seed = seed
        self.t = t


class HorizonError(FhnLevyError):
    """Quadrature horizon too short for the requested tail accuracy."""

    def __init__(self, msg, tail=None):
        super().__init__(msg)
        self.tail = tail


class ConfigError(FhnLevyError, ValueError):
    pass
