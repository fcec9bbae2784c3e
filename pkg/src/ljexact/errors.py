"""Exception hierarchy shared by all solver modules."""


class LJError(Exception):
    """Base class for every error raised by :mod:`ljexact`."""


class DomainError(LJError, ValueError):
    """Physical parameters outside the supported domain."""


class ConfigurationError(LJError, ValueError):
    """Numerical settings that cannot produce a meaningful result."""


class IntegrationError(LJError):
    """The Taylor integrator could not reach its local tolerance."""


class DegenerateIndexError(LJError):
    """The two Floquet indices coincide (logarithmic case)."""


class SingularSystemError(LJError):
    """A banded system turned out numerically singular."""


class ConvergenceError(LJError):
    """An iteration did not converge within its budget."""


class DivergenceError(ConvergenceError):
    """Newton corrections grew for several consecutive steps."""


class WindowExhaustionError(LJError):
    """A coefficient sum needs Laurent coefficients outside the stored window."""


class InconsistencyError(LJError):
    """Independent evaluations of the same constant disagree."""


class PrecisionExhaustionError(LJError):
    """No representation of the wave function reaches the requested accuracy."""


class QuadratureError(LJError):
    """Adaptive quadrature did not meet its tolerance."""


class NoSignChangeError(LJError):
    """A bracket supplied to a root finder does not contain a sign change."""
