"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class SizeError(ValueError):
    """A problem instance exceeds a hard size cap."""


class LPError(RuntimeError):
    """The linear-programming backend failed to produce a usable answer."""
