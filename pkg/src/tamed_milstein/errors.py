"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments or configuration supplied by the caller."""


class NumericalFailure(ArithmeticError):
    """A computation produced a non-finite value where a finite one is required."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
