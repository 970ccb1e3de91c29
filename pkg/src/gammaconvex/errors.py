"""Exception hierarchy shared by all modules."""


class GammaConvexError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GammaConvexError, ValueError):
    """An input object violates one of its invariants."""


class DomainError(GammaConvexError, ValueError):
    """An argument lies outside the domain of the operation."""


class InconclusiveError(GammaConvexError):
    """A numerical limit could not be estimated to the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IterationDivergence(GammaConvexError):
    """A recurrence left its admissible range (typically non-Dini input)."""


class DiscretizationError(GammaConvexError):
    """The grid discretization cannot be assembled as a monotone scheme."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SolverError(GammaConvexError):
    """The linear solve did not reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(GammaConvexError):
    """A harness configuration could not be parsed or validated."""

    def __init__(self, message, line=None, key=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key {key!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.key = key
