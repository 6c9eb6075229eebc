"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: bad input (2), incompatible
hasher/parameters (3), internal consistency failures (4).
"""


class MultijoinError(Exception):
    """Base class for all package errors."""


class InputError(MultijoinError, ValueError):
    """Unusable user input: files, flags, edit records, generator specs."""


class NotFoundError(MultijoinError, KeyError):
    """Reference to a table, row, column, or value that does not exist."""


class CompatibilityError(MultijoinError, ValueError):
    """Mismatched hasher configuration, bit widths, or derived parameters."""


class FormatError(MultijoinError, ValueError):
    """Persisted index file is corrupt, truncated, or has a bad magic/version."""


class ConsistencyError(MultijoinError, RuntimeError):
    """Internal cross-check failed (e.g. discovery modes disagree)."""


class BudgetError(MultijoinError, RuntimeError):
    """Exhaustive oracle evaluation would exceed its configured budget."""
