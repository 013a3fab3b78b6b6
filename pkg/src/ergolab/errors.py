"""Exception types shared across ergolab."""


class ErgolabError(Exception):
    pass


class DomainError(ErgolabError, ValueError):
    """Input outside an operation's domain (bad parameters, family mismatch)."""


class ResourceError(ErgolabError):
    """A configured cap (stage count, cell count, level count) was hit.

    ``bounds`` carries the best (lo, hi) pair reached before giving up, when
    the operation produces interval-valued results.
    """

    def __init__(self, message, bounds=None):
        super().__init__(message)
        self.bounds = bounds
