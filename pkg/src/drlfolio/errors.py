"""Exception types shared across the package."""


class FormatError(ValueError):
    """A data file violates the expected schema (duplicate dates, bad OHLC rows)."""


class AlignmentError(ValueError):
    """Price series cannot be placed on a common date axis."""


class WindowError(ValueError):
    """Not enough history to build an observation window."""


class DegenerateActionError(ValueError):
    """An action collapsed to the zero vector and cannot be normalized."""


class RuinError(ValueError):
    """A cost rate of 1 or more would wipe out the portfolio."""


class ProtocolError(RuntimeError):
    """An operation was called out of order (step after done, backward before forward)."""


class ConfigError(ValueError):
    """A configuration value or combination is invalid."""


class InsufficientUniverseError(ValueError):
    """Too few scorable assets to build the requested long/short book."""
