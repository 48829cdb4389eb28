"""Exception hierarchy shared by every module."""


class LPCNSError(Exception):
    """Base class for all errors raised by the package."""


class NumericalError(LPCNSError, ValueError):
    """Non-finite values where finite ones are required."""


class RangeError(LPCNSError, ValueError):
    """Dyadic index or cutoff outside the resolved range."""


class ShapeError(LPCNSError, ValueError):
    """Mismatched grids or scalar/vector components."""


class DomainError(LPCNSError, ValueError):
    """Argument outside the admissible domain (exponents, vacuum for I(a))."""


class BesovIndexError(LPCNSError, IndexError):
    """Norm series and Besov index disagree on the integrability exponent."""


class PreconditionError(LPCNSError, ValueError):
    """An operation's hypothesis does not hold for the given inputs."""


class DataError(LPCNSError, ValueError):
    """Empty or malformed data container."""


class ConvergenceError(LPCNSError, ValueError):
    """A family of sequences does not converge as required."""


class EllipticityError(LPCNSError, ValueError):
    """Viscosity coefficients violate mu > 0, 2 mu + lambda > 0."""


class StepRejected(LPCNSError, RuntimeError):
    """A time step violated the CFL bound and must be retried with smaller dt."""


class VacuumError(LPCNSError, RuntimeError):
    """The density approached vacuum (1 + a below half the configured margin)."""


class DiffeoError(LPCNSError, RuntimeError):
    """A flow map lost invertibility or could not be inverted."""
