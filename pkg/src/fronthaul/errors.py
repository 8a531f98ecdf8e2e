"""Exception types raised across the package."""


class FronthaulError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(FronthaulError, ValueError):
    """An argument violates an operation's precondition."""


class BracketError(FronthaulError, ValueError):
    """A root-finding bracket does not enclose the target."""


class ConvergenceError(FronthaulError, RuntimeError):
    """An iterative routine hit its iteration cap."""


class RankDeficientError(FronthaulError, ArithmeticError):
    """A matrix that must be invertible is (numerically) singular."""


class ConfigError(FronthaulError, ValueError):
    """Malformed or unknown configuration entries."""
