"""Exception hierarchy shared by every module of the package."""


class ResolvabilityError(Exception):
    """Base class for all package errors."""


class ValidationError(ResolvabilityError, ValueError):
    """Malformed distribution, channel or argument."""


class CapExceededError(ResolvabilityError):
    """An enumeration would exceed its hard size cap."""

    def __init__(self, message, *, size=None, cap=None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class InfeasibleTargetError(ResolvabilityError):
    """No input distribution reproduces the target through the channel."""

    def __init__(self, message, *, residual=None, worst_output=None):
        super().__init__(message)
        self.residual = residual
        self.worst_output = worst_output


class InfiniteDivergenceError(ResolvabilityError):
    """A Monte Carlo trial produced an infinite divergence."""

    def __init__(self, message, *, trial=None):
        super().__init__(message)
        self.trial = trial


class ConfigError(ResolvabilityError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message, *, line=None, path=None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.path = path
