"""Exception hierarchy shared by every layer of the simulator."""


class WarpConsError(Exception):
    """Base class for all simulator errors."""


class InvalidParameter(WarpConsError, ValueError):
    """A configuration value is out of range; ``key`` names the config field when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class InvalidLength(WarpConsError, ValueError):
    pass


class ArbitrationError(WarpConsError):
    pass


class ScheduleError(WarpConsError):
    pass


class TooLarge(WarpConsError):
    """Raised when an enumeration would exceed its configured cap."""

    def __init__(self, message: str, count: int | None = None):
        super().__init__(message)
        self.count = count


class BudgetViolation(WarpConsError):
    """An action exceeded the per-phase instruction budget or impersonated a process."""


class IllegalAction(WarpConsError):
    pass


class AllNull(WarpConsError, ValueError):
    """mode() was asked to pick from a list holding only NULL entries."""


class IncompleteTrace(WarpConsError):
    pass


class NonTermination(WarpConsError):
    pass


class ConfigError(WarpConsError):
    """An experiment file could not be parsed; ``key`` names the offending field."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
