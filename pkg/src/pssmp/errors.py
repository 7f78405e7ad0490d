"""Exception types shared across the toolkit."""


class PssmpError(Exception):
    """Base class for all toolkit errors."""


class ModelError(PssmpError):
    """A model violates a precondition (wrong sign of jumps, bad mean...)."""


class DomainError(PssmpError):
    """An argument is outside the mathematical domain of an operation."""


class HorizonError(PssmpError):
    """A path is too short for the requested functional."""
