"""Exception hierarchy shared by every module."""


class PrequantError(Exception):
    """Base class for all library errors."""


class InputError(PrequantError, ValueError):
    """Malformed arguments: wrong shapes, non-tangent vectors, bad identifiers."""


class PreconditionError(PrequantError):
    """A documented precondition does not hold (e.g. a lift without normalization)."""


class DomainError(PrequantError):
    """The inputs are well formed but outside the operation's domain."""


class IntegrationError(PrequantError):
    """A numerical flow drifted away from its constraint manifold."""


class QuadratureError(PrequantError):
    """Grid doubling failed to converge."""

    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)


class ScenarioError(PrequantError):
    """Scenario file could not be parsed or validated."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
