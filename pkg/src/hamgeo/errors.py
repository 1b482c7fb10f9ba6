"""Exception hierarchy shared by every hamgeo module."""


class HamgeoError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HamgeoError):
    """Raised when expression text cannot be parsed.

    Carries the zero-based character ``position`` of the offending token.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"at position {position}: {message}")
        self.position = position


class EvaluationError(HamgeoError):
    """Raised on arithmetic domain violations during evaluation.

    Covers division by zero, ln/sqrt of a non-positive argument, and
    powers of a non-positive base with a non-integer exponent.
    """


class DimensionError(HamgeoError):
    """Raised when phase-space dimensions of two objects disagree."""


class RegularityError(HamgeoError):
    """Raised when a matrix that must be inverted is numerically singular.

    ``rcond`` holds the reciprocal condition estimate that triggered the
    failure (``None`` when a pivot vanished outright).
    """

    def __init__(self, message: str, rcond: float | None = None):
        super().__init__(message)
        self.rcond = rcond


class HorizontalityError(HamgeoError):
    """Raised when an operation requires a horizontal Hamiltonian vector
    field but the horizontality residual at the point is too large.

    ``residual`` holds the offending max-norm residual.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ManifestError(HamgeoError):
    """Raised for malformed manifests: bad JSON, duplicate or missing
    names, inconsistent dimensions, or invalid run parameters."""
