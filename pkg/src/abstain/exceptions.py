"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input: malformed density, classifier, scenario or CLI flags."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class DomainError(ValueError):
    """Input outside the domain where an operation is defined."""
