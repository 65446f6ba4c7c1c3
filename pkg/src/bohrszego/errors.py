"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class IndexOverflowError(OverflowError):
    """An integer index would not fit in a signed 64-bit word."""


class ResourceError(RuntimeError):
    """A request exceeds the configured node or memory budget."""


class DegenerateWeightError(ValueError):
    """The Gram matrix of a weight is not positive definite."""


class NotOuterError(ValueError):
    """A certificate requiring an outer function received one that is not."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
