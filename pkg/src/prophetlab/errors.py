"""Exception types shared across the package."""


class ProphetLabError(Exception):
    """Base class for errors raised by prophetlab."""


class DomainError(ProphetLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(ProphetLabError, ValueError):
    """A schedule, matrix, or parameter set violates a structural invariant."""


class UnsupportedDistributionError(ProphetLabError, ValueError):
    """A distribution family is not usable by the requested operation."""


class RangeError(ProphetLabError, ValueError):
    """An integer argument exceeds the supported exact range."""


class SolverError(ProphetLabError, RuntimeError):
    """A root finder or verifier failed to bracket or converge."""
