class ExitError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ExitError, ValueError):
    """Arguments outside the region where an identity or model is defined."""


class NumericFailure(ExitError, ArithmeticError):
    """Root finding or a denominator check failed for a near-degenerate model."""


class UnknownIdentity(ExitError, KeyError):
    """Identity identifier not present in the dispatch table."""
