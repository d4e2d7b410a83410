class DomainError(ValueError):
    """Raised when an argument lies outside the domain an operation accepts."""


class ConsistencyError(RuntimeError):
    """Raised when an internal numerical invariant fails.

    Carries a ``diagnostics`` mapping so that the caller (usually the CLI)
    can report what went wrong.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
