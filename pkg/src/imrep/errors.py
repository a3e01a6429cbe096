"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: DataError -> 2, NumericalError -> 3.
"""


class ImrepError(Exception):
    """Base class for all package errors."""


class DataError(ImrepError):
    """Malformed or inconsistent input data (manifests, images, caches)."""


class NumericalError(ImrepError):
    """A numerical routine failed (non-finite values, no convergence)."""
