"""Exception types raised across the package."""


class NsplearnError(Exception):
    """Base class for all package errors."""


class InvalidInputError(NsplearnError, ValueError):
    pass


class DimensionMismatchError(NsplearnError, ValueError):
    pass


class DegenerateConstraintError(NsplearnError, ValueError):
    """A constraint matrix lost row rank.

    ``index`` is the offending observation (or rollout step) when known.
    """

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} (at index {index})"
        super().__init__(message)
        self.index = index


class SingularStateError(NsplearnError, ValueError):
    pass


class ConfigError(NsplearnError, ValueError):
    pass


class GenerationError(NsplearnError, RuntimeError):
    pass


class InvalidStartError(NsplearnError, ValueError):
    pass


class ParseError(NsplearnError, ValueError):
    """Malformed data file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
