"""Exception types shared across the package.

Plain ``ValueError`` is used for invalid arguments; ``OSError`` for
unreadable paths.  The two classes below exist so callers (notably the
CLI) can map failures to distinct exit codes.
"""


class NumericalError(RuntimeError):
    """A matrix factorization or solve failed.

    ``pivot`` carries the 1-based index of the leading minor that broke a
    Cholesky factorization, when known.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class FormatError(ValueError):
    """A file's content does not match its declared layout."""
