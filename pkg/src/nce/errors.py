"""Exception hierarchy.

The CLI maps these to exit codes: schema problems exit 2, numerical guards
exit 3, internal invariant failures exit 4.
"""


class NCEError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class DomainError(NCEError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 2


class SchemaError(DomainError):
    """An input file or payload does not match the documented schema."""

    exit_code = 2


class GuardError(NCEError):
    """A dimension or horizon guard was exceeded."""

    exit_code = 3


class InvariantError(NCEError):
    """A structural invariant failed inside a computation."""

    exit_code = 4
