"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI when
it reports failures as ``code=..., msg=...``.
"""

from __future__ import annotations


class FdivError(Exception):
    """Base class for all package errors."""

    code = "error"


class ValidationError(FdivError, ValueError):
    """Input violates an operation's precondition."""

    code = "validation"


class DomainError(ValidationError):
    code = "domain"


class PreconditionError(ValidationError):
    code = "precondition"


class UnsupportedKindError(ValidationError):
    code = "unsupported_kind"


class DataError(ValidationError):
    code = "data"


class UndefinedRatioError(ValidationError):
    code = "undefined_ratio"


class SizeError(ValidationError):
    code = "size"


class GrowthConditionError(PreconditionError):
    code = "growth_condition"


class SmoothnessError(ValidationError):
    code = "smoothness"


class UnboundedTruncation(FdivError):
    """The truncation level ``2 (f')^{-1}(4D/eps)`` is infinite."""

    code = "unbounded_truncation"


class DegenerateTruncation(FdivError):
    """No target mass survives truncation, so the conditioned law is undefined."""

    code = "degenerate_truncation"


class InvariantViolation(FdivError, AssertionError):
    """A checked mathematical invariant failed; indicates a bug or bad input."""

    code = "invariant"
