"""Problem definition, precision handling and exponent conventions.

All heavy arithmetic runs on :mod:`mpmath` numbers.  Every public operation
of the package enters ``mp.workprec(spec.precision_bits)`` itself, so callers
never have to touch the global mpmath context.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from numbers import Integral, Real

from mpmath import mp, mpf

from .errors import ConfigurationError, DomainError

#: smallest accepted value for the truncation parameters M, N, thome_terms
MIN_TRUNCATION = 20


def to_mpf(x) -> mpf:
    """Convert ``x`` to an mpf at the current precision.

    Python floats go through their shortest repr so that ``-11.909183`` means
    the decimal number and not its nearest binary double.
    """
    if isinstance(x, Real) and not isinstance(x, (Integral, mpf)):
        # numpy floats included; their repr is not a plain number
        return mpf(repr(float(x)))
    return mpf(x)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings shared by every stage of the solver."""

    precision_bits: int = 113
    M: int = 360
    N: int = 360
    thome_terms: int = 100
    newton_tol: float = 1e-13
    newton_max_iter: int = 25
    circuit_steps: int = 32
    degeneracy_tol: float = 1e-20
    residual_tol: float = 1e-30
    edge_tol: float = 1e-20
    wronskian_tol: float = 1e-8
    wave_tol: float = 1e-10

    def __post_init__(self):
        if self.precision_bits < 24:
            raise ConfigurationError("precision_bits must be at least 24")
        for name in ("M", "N", "thome_terms"):
            if getattr(self, name) < MIN_TRUNCATION:
                raise ConfigurationError(f"{name} must be >= {MIN_TRUNCATION}")
        if self.newton_max_iter < 1:
            raise ConfigurationError("newton_max_iter must be positive")
        if self.circuit_steps < 8:
            raise ConfigurationError("circuit_steps must be >= 8")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ProblemSpec:
    """Validated parameters of one radial equation.

    ``lam`` is the dimensionless intensity, ``l`` the angular momentum and
    ``eps`` the dimensionless energy ``2 m r_e^2 E / hbar^2``.
    """

    lam: mpf
    l: int
    eps: mpf
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def precision_bits(self) -> int:
        return self.config.precision_bits

    @property
    def M(self) -> int:
        return self.config.M

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def thome_terms(self) -> int:
        return self.config.thome_terms

    @property
    def centrifugal(self) -> int:
        return self.l * (self.l + 1)

    def workprec(self):
        return mp.workprec(self.config.precision_bits)

    def with_energy(self, eps) -> "ProblemSpec":
        return make_problem(self.lam, self.l, eps, self.config)

    def with_config(self, config: SolverConfig) -> "ProblemSpec":
        return make_problem(self.lam, self.l, self.eps, config)


def make_problem(lam, l, eps, config: SolverConfig | None = None, **overrides) -> ProblemSpec:
    """Validate parameters and return a :class:`ProblemSpec`.

    Keyword ``overrides`` patch individual :class:`SolverConfig` fields.
    """
    config = config or SolverConfig()
    if overrides:
        config = config.with_(**overrides)
    if not isinstance(l, Integral) or l < 0:
        raise DomainError(f"angular momentum must be a non-negative integer, got {l!r}")
    with mp.workprec(config.precision_bits):
        lam_ = to_mpf(lam)
        eps_ = to_mpf(eps)
    if not lam_ > 0:
        raise DomainError("lambda must be positive (the origin expansion degenerates at 0)")
    if eps_ > 0:
        raise DomainError("positive energies (scattering states) are not supported")
    return ProblemSpec(lam_, int(l), eps_, config)


@dataclass(frozen=True)
class ExponentCoefficients:
    """Exponents of the Thome solutions at infinity (alpha) and origin (beta)."""

    alpha3: mpf
    alpha4: mpf
    beta5: mpf
    beta6: mpf
    rho: int = 3


def exponent_coefficients(spec: ProblemSpec) -> ExponentCoefficients:
    """Return the sign-fixed exponents for ``spec``.

    ``alpha4 = +sqrt(-eps)`` and ``beta6 = +sqrt(lambda)``; the decaying
    partners are their exact negatives.
    """
    # negation rounds to the ambient precision, so it stays inside workprec
    with spec.workprec():
        alpha4 = mp.sqrt(-spec.eps)
        beta6 = mp.sqrt(spec.lam)
        return ExponentCoefficients(alpha3=-alpha4, alpha4=alpha4, beta5=-beta6, beta6=beta6)


def require_bound_energy(spec: ProblemSpec) -> None:
    if not spec.eps < 0:
        raise DomainError("this operation needs a strictly negative energy")


def unit_roundoff() -> mpf:
    return mpf(2) ** (-mp.prec)
