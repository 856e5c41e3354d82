"""Exception types shared across the package."""


class VacusenseError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(VacusenseError, ValueError):
    """A physical or configuration parameter is out of its valid domain."""


class InvalidInputError(VacusenseError, ValueError):
    """Runtime data (traces, records, datasets) violates a precondition."""


class StateError(VacusenseError, RuntimeError):
    """An operation was attempted in a state that forbids it."""


class TrainingError(VacusenseError, RuntimeError):
    """Model training cannot proceed (e.g. single-class data)."""


class ProtocolError(VacusenseError, RuntimeError):
    """A wire-protocol command violates the session protocol."""
