"""Exception taxonomy shared across the package.

Every error carries a short machine-readable ``code`` alongside the human
message so CLI consumers and tests can dispatch without string matching.
"""


class FrechetrmError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ShapeError(FrechetrmError):
    """Incompatible dimensions, grids, or composite schemas."""

    code = "shape"


class DomainError(FrechetrmError):
    """Arguments outside the operation's domain (empty input, bad alpha, ...)."""

    code = "domain"


class ValidationError(FrechetrmError):
    """A dataset or file violates a structural invariant; names the location."""

    code = "validation"


class ParseError(FrechetrmError):
    """Unreadable or schema-invalid input file; carries the JSON path."""

    code = "parse"


class CalibrationError(FrechetrmError):
    """The null calibration is unavailable (degenerate variances, missing
    within-subject information)."""

    code = "calibration"


class NumericError(FrechetrmError):
    """A numerical routine failed to converge."""

    code = "numeric"
