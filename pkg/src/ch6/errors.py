"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid grid, parameter, or run configuration."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BlowUpError(RuntimeError):
    """Raised when a trajectory produces non-finite or runaway values.

    Carries the model time of the failure and the last finite diagnostics
    record (``None`` if no record was emitted yet).
    """

    def __init__(self, message, t, last_record=None):
        super().__init__(message)
        self.t = t
        self.last_record = last_record
