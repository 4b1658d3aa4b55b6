"""Exception types shared across the library."""


class PrefElicitError(Exception):
    """Base class for all library errors."""


class CatalogFormatError(PrefElicitError):
    """Raised when a catalog (or prior) file cannot be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidArgumentError(PrefElicitError):
    """Raised when an operation is called with arguments violating its contract."""


class DegeneratePosteriorError(PrefElicitError):
    """All posterior particle weights collapsed to zero (noiseless update)."""


class BudgetExceededError(PrefElicitError):
    """An exhaustive enumeration would exceed the caller-supplied budget."""
