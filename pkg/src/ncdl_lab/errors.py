"""Exception types shared across the package."""


class NcdlError(Exception):
    """Base class for all errors raised by ncdl_lab."""


class OrderOverflow(NcdlError):
    pass


class InvalidInput(NcdlError, ValueError):
    pass


class QuadratureInconsistency(NcdlError):
    pass


class DomainError(NcdlError, ValueError):
    pass


class WindowError(NcdlError, IndexError):
    """Raised when an operator window does not fit the representation parameters."""


class OracleBudgetExceeded(NcdlError):
    pass


class IterationLimit(NcdlError):
    pass


class InternalError(NcdlError):
    pass


class ConfigError(NcdlError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
