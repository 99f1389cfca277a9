"""Exception types shared across the package."""


class MarketError(Exception):
    """Base class for all package-specific errors."""


class UsageError(MarketError):
    """Caller supplied arguments or configuration that make no sense."""


class ConfigError(UsageError):
    """A config or series file failed to parse or validate."""


class FeasibilityError(MarketError):
    """A model precondition (bounds, envelopes, balance range) is violated."""


class SolverError(MarketError):
    """The balance solver could not meet its residual contract."""
