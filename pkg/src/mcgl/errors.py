"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, IngestionError -> 3,
InternalError -> 4.
"""


class McglError(Exception):
    """Base class for all errors raised by this package."""


class InputError(McglError):
    """Invalid argument, configuration value, or precondition violation."""


class IngestionError(McglError):
    """A dataset file is missing or could not be parsed."""


class InternalError(McglError):
    """An internal invariant was violated; indicates a bug."""
