"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: usage errors -> 1, DataError -> 2,
NumericalError -> 3.
"""


class TriocastError(Exception):
    """Base class for all toolkit errors."""


class DataError(TriocastError, ValueError):
    """Malformed, inconsistent, or precondition-violating input data."""


class NumericalError(TriocastError, RuntimeError):
    """A numerical procedure failed (degenerate, singular, non-convergent)."""
