class LSVIError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(LSVIError):
    pass


class ValidationError(LSVIError):
    """An environment violates the linear-MDP invariants or cannot be decoded."""


class NumericalError(LSVIError):
    """A maintained matrix or value left the range it must stay in."""
