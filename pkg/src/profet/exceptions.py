"""Exception hierarchy shared across the package."""


class ProfetError(Exception):
    """Base class for all errors raised by profet."""


class ValidationError(ProfetError, ValueError):
    """Input data violates a documented invariant."""


class TraceParseError(ValidationError):
    """A trace row could not be parsed."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class BundleError(ProfetError):
    """A model bundle could not be loaded."""


class BundleVersionError(BundleError):
    pass


class BundleChecksumError(BundleError):
    pass
