"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or arguments violate a documented contract."""


class MissingGaError(ValidationError):
    """A required general-availability month is absent from the calendar."""


class NumericError(RuntimeError):
    """A computation cannot produce a meaningful number (degenerate input)."""
