"""Exception and warning types raised across the package."""


class FreqyWMError(Exception):
    """Base class for all package errors."""


class ParameterError(FreqyWMError, ValueError):
    """An argument is outside its admissible range."""


class IngestError(FreqyWMError, ValueError):
    """A dataset file could not be decoded."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SecretFormatError(FreqyWMError, ValueError):
    """A secret file is malformed, has an unknown version or violates an invariant."""


class ContractViolation(FreqyWMError, RuntimeError):
    """An internal pre/post-condition does not hold (e.g. a plan that breaks ranking)."""


class NumericalError(FreqyWMError, ArithmeticError):
    """A numeric routine left a residue above its tolerance."""


class FreqyWMWarning(UserWarning):
    """Non-fatal conditions such as an empty watermark or a seeded secret."""
