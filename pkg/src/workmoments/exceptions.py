"""Exception hierarchy shared by all workmoments modules."""


class WorkMomentsError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(WorkMomentsError, ValueError):
    pass


class SizeError(WorkMomentsError, ValueError):
    pass


class DomainError(WorkMomentsError, ValueError):
    pass


class NumericalError(WorkMomentsError, ArithmeticError):
    pass


class StepSizeError(NumericalError):
    pass


class UndefinedRatioError(NumericalError):
    pass


class ConfigError(WorkMomentsError, ValueError):
    """Invalid run configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
