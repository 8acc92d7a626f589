"""Exception hierarchy shared across the toolkit.

Every error carries a stable ``category`` string so foreign-language
callers (and the JSON service) can map failures without parsing messages.
"""


class ScdkitError(Exception):
    """Base class for all toolkit errors."""

    category = "internal"


class ValidationError(ScdkitError, ValueError):
    """Invalid argument or malformed domain object."""

    category = "validation"


class CollarOverlapError(ScdkitError, ValueError):
    """Collar windows of two annotated change points share frames."""

    category = "overlap"


class TooManyConfigurationsError(ScdkitError, ValueError):
    """Brute-force enumeration would exceed the configuration budget."""

    category = "too_large"


class NumericError(ScdkitError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""

    category = "numeric"


class ParseError(ScdkitError, ValueError):
    """Malformed input file. ``line`` is the 1-based offending line number."""

    category = "parse"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StreamOrderError(ScdkitError, ValueError):
    """Frames were fed to a streaming detector out of order."""

    category = "protocol"


class DivergenceError(ScdkitError, ArithmeticError):
    """Training produced a non-finite loss."""

    category = "divergence"
