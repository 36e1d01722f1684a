"""Exception hierarchy shared across the service.

Every error that crosses the API boundary maps to a stable machine-readable
code (see ``code`` attributes); the HTTP layer translates them to status
codes without string matching.
"""


class PulseError(Exception):
    """Base class for all domain errors."""

    code = "internal"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details


class ValidationError(PulseError):
    code = "validation"


class StateError(PulseError):
    """Operation not legal in the session's current state."""

    code = "state"


class SequenceError(PulseError):
    """Out-of-order chunk; ``details['expected']`` carries the next seq."""

    code = "sequence"


class NotFoundError(PulseError):
    code = "not_found"


class AuthError(PulseError):
    """Credential denied (distinct from malformed input)."""

    code = "auth"


class ForbiddenError(PulseError):
    """Valid-looking request with the wrong session token."""

    code = "forbidden"


class ConfigurationError(PulseError):
    code = "configuration"


class ProviderError(PulseError):
    """Remote provider failure; callers may retry or fall back."""

    code = "provider"

    def __init__(self, message: str, retryable: bool = True, **details):
        super().__init__(message, **details)
        self.retryable = retryable


class StorageError(PulseError):
    code = "storage"


class IntegrityError(StorageError):
    """Checksum mismatch on a stored or imported artifact."""

    code = "integrity"


class EmptyInputError(ValidationError):
    code = "empty_input"
