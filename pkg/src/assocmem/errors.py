"""Exception hierarchy shared across the package."""


class AssocMemError(Exception):
    """Base class for all package errors."""


class InvalidArgument(AssocMemError, ValueError):
    pass


class NotFound(AssocMemError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class SnapshotFormatError(AssocMemError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptySeedError(AssocMemError):
    """No query entity matched a node of the graph."""

    def __init__(self, message, skipped=()):
        super().__init__(message)
        self.skipped = tuple(skipped)


class FetchError(AssocMemError):
    def __init__(self, message, revision_id=None):
        self.revision_id = revision_id
        super().__init__(message)


class CacheError(AssocMemError):
    pass


class LoadError(AssocMemError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class EventLogError(AssocMemError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
