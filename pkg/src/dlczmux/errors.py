"""Exception types shared across the package."""


class DlczError(Exception):
    """Base class for all errors raised by dlczmux."""


class InvalidParameterError(DlczError, ValueError):
    """A parameter lies outside its physical or declared range."""


class TemporalOrderError(DlczError, ValueError):
    """Times were supplied in an order the model cannot evaluate."""


class UnsupportedScheduleError(DlczError, ValueError):
    """The field schedule is not a single-flip echo sequence."""


class PreconditionError(DlczError, RuntimeError):
    """An operation was called in a state its contract excludes."""


class InsufficientHeraldsError(PreconditionError):
    """Too few heralded events are expected for a meaningful estimate."""


class NonTerminationError(DlczError, RuntimeError):
    """A stochastic process has zero success probability and would never finish."""


class ConfigError(DlczError, ValueError):
    """A run configuration could not be loaded or validated."""
