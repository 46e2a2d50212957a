"""Exception types shared across the package."""


class FedmeldError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfigError(FedmeldError):
    """A configuration value, or a combination of values, is unusable."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


class InvalidArgumentError(FedmeldError, ValueError):
    """An operation received an argument outside its domain."""


class ValidityError(FedmeldError):
    """A bound constant or recursion left its region of validity."""


class InfeasibleScheduleError(FedmeldError):
    """The timing constraints cannot be met by any round schedule."""


class EstimationError(FedmeldError):
    """An inner numerical solver failed or the estimator does not apply."""


class NumericError(FedmeldError, ArithmeticError):
    """A computation produced non-finite values."""
