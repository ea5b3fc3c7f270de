"""Exception types shared across modules."""


class NfAliasError(Exception):
    """Base class for library errors."""


class DomainError(NfAliasError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(NfAliasError, ValueError):
    """A configuration parameter is invalid."""


class SingularityError(NfAliasError, ValueError):
    """A location is too close to the array curve."""


class ResourceError(NfAliasError, RuntimeError):
    """A computation would exceed its sample budget."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required
