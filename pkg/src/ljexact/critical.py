"""Critical intensities: values of lambda at which a zero-energy state appears.

At ``eps = 0`` infinity becomes a regular singular point with exponents
``l + 1`` and ``-l``.  The corresponding Frobenius solutions

    f_g(z) = z**(l+1) * sum_{n<=0} g_n z**n,   f_d(z) = z**(-l) * sum_{n<=0} d_n z**n

converge for every ``z > 0``.  Writing the solution regular at the origin
as ``w5 = K_g f_g + K_d f_d``, a new bound state appears where the growing
coefficient ``K_g`` changes sign.  ``K_g`` and ``K_d`` are Wronskians with
``w5``, obtained from the rank-5 lattice formula of :mod:`.connection`
(``method="frobenius"``) or by outward integration and a local fit
(``method="integrate"``).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from mpmath import mp, mpf
from scipy.optimize import brentq

from .connection import wronskian_regular_origin
from .errors import DomainError, InconsistencyError, WindowExhaustionError
from .floquet import FloquetSolution, floquet_terms
from .numerics import make_problem, to_mpf
from .taylor import propagate
from .thome import evaluate_thome_origin, thome_origin

log = logging.getLogger(__name__)

#: zero padding above n = 0 so that the lattice formula can read c_{n+6}
PADDING = 30
#: largest Frobenius window tried before giving up
MAX_TERMS = 6400
#: relative agreement required between lattice points
LATTICE_TOL = 1e-10
#: precision may grow up to this factor over the requested one
MAX_PREC_FACTOR = 4
#: geometric step of the outward integration (Taylor radius is z itself)
STEP_RATIO = mpf("1.2")


@dataclass(frozen=True)
class CriticalResult:
    """``index``-th critical intensity for angular momentum ``l``.

    ``growth_residual`` is the normalized growth coefficient at ``lambda_crit``.
    """

    l: int
    index: int
    lambda_crit: mpf
    growth_residual: mpf


@dataclass(frozen=True)
class GrowthData:
    """Expansion ``w5 = k_grow f_g + k_decay f_d`` of the regular solution at eps = 0."""

    lam: mpf
    l: int
    k_grow: mpf
    k_decay: mpf
    spread: mpf
    terms: int
    prec: int

    @property
    def value(self) -> mpf:
        """``k_grow`` scaled to the unit circle, so that zeros of ``k_decay`` are harmless."""
        return self.k_grow / mp.hypot(self.k_grow, self.k_decay)


def frobenius_coefficients(lam, l, nu, terms):
    """Coefficients ``f_n`` (``n = 0, -2, ..., -terms``) of the Frobenius series at infinity.

    ``f_n [(n+nu)(n-1+nu) - l(l+1)] = lam f_{n+10} - 2 lam f_{n+4}`` with ``f_0 = 1``.
    """
    cent = l * (l + 1)
    f = {0: mpf(1)}
    for n in range(-2, -terms - 1, -2):
        f[n] = (lam * f.get(n + 10, 0) - 2 * lam * f.get(n + 4, 0)) / ((n + nu) * (n - 1 + nu) - cent)
    return f


def frobenius_solution(lam, l, which: str, terms: int, prec: int) -> FloquetSolution:
    """The growing (``which="grow"``) or decaying (``"decay"``) Frobenius solution.

    Stored as a :class:`FloquetSolution` with real index and window
    ``[-terms, PADDING]``, the coefficients above ``n = 0`` being zero.
    """
    if which not in ("grow", "decay"):
        raise ValueError("which must be 'grow' or 'decay'")
    terms += terms % 2
    with mp.workprec(prec):
        lam = to_mpf(lam)
        nu = mpf(l + 1) if which == "grow" else mpf(-l)
        f = frobenius_coefficients(lam, l, nu, terms)
        coeffs = tuple(f.get(n, mp.zero) for n in range(-terms, PADDING + 1))
    return FloquetSolution(nu, coeffs, (terms, PADDING), 0, prec)


def _initial_terms(lam):
    # the Frobenius coefficients peak near |n| ~ 5 (lam / 25)**(1/5) * ..., growing with lam
    return 400 if lam < 200 else 800


def _frobenius_growth(lam, l, prec, terms):
    terms = terms or _initial_terms(float(lam))
    base_prec, last_error = prec, None
    while terms <= MAX_TERMS and prec <= MAX_PREC_FACTOR * base_prec:
        spec = make_problem(lam, l, 0, precision_bits=prec)
        w5 = thome_origin(spec, 5, terms + PADDING + 20)
        try:
            with mp.workprec(prec):
                fg = frobenius_solution(spec.lam, l, "grow", terms, prec)
                fd = frobenius_solution(spec.lam, l, "decay", terms, prec)
                # spreads are judged against the pair, since K_g vanishes at a critical lam
                wd, sd = wronskian_regular_origin(fd, w5, tol=mp.inf, spread=True)
                wg, sg = wronskian_regular_origin(fg, w5, tol=mp.inf, spread=True)
                spread = max(sd * abs(wd), sg * abs(wg)) / mp.hypot(abs(wd), abs(wg))
                if spread > LATTICE_TOL:
                    raise InconsistencyError(f"lattice spread {mp.nstr(spread, 3)}")
                # W[f_d, f_g] = 2l + 1
                k_grow = mp.re(wd) / (2 * l + 1)
                k_decay = -mp.re(wg) / (2 * l + 1)
                return GrowthData(spec.lam, l, k_grow, k_decay, spread, terms, prec)
        except WindowExhaustionError as exc:
            last_error = exc
            terms *= 2
        except InconsistencyError as exc:
            # lattice sums cancel heavily for large lam: more bits, same window
            last_error = exc
            prec = prec * 3 // 2
        log.debug("retrying lam=%s with terms=%d, prec=%d: %s", lam, terms, prec, last_error)
    raise InconsistencyError(f"growth coefficient did not stabilize: {last_error}")


def _integrate_growth(lam, l, prec, z0, zf, terms):
    spec = make_problem(lam, l, 0, precision_bits=prec)
    w5 = thome_origin(spec, 5)
    cent = l * (l + 1)
    with mp.workprec(prec):
        z0, zf = to_mpf(z0), to_mpf(zf)
        # the origin series must be accurate at the seed point; move inwards if not
        while True:
            v, dv, est = evaluate_thome_origin(w5, z0, derivative=True)
            if est < mpf(10) ** -(prec * 0.3) or z0 < mpf("0.05"):
                break
            z0 *= mpf("0.9")
        # near the origin the solution varies on the scale z**6 / sqrt(lam)
        root = mp.sqrt(spec.lam)
        points = [z0]
        while points[-1] < zf:
            z = points[-1]
            points.append(min(z + min((STEP_RATIO - 1) * z, 2 * z ** 6 / root), zf))
        (state,), _ = propagate(spec.lam, cent, mp.zero, points, [(v, dv)])
        w, dw = state
        fg = frobenius_solution(spec.lam, l, "grow", terms, prec)
        fd = frobenius_solution(spec.lam, l, "decay", terms, prec)
        g, dg, _ = floquet_terms(fg, zf, derivative=True)
        d, dd, _ = floquet_terms(fd, zf, derivative=True)
        k_grow = (d * dw - dd * w) / (2 * l + 1)
        k_decay = -(g * dw - dg * w) / (2 * l + 1)
    return GrowthData(spec.lam, l, mp.re(k_grow), mp.re(k_decay), mp.zero, terms, prec)


def growth_data(lam, l: int, method: str = "frobenius", precision_bits: int = 113, terms=None,
                z0=0.3, zf=30) -> GrowthData:
    """Expansion coefficients of the regular zero-energy solution on the Frobenius pair.

    ``method="frobenius"`` uses lattice Wronskians and enlarges the series
    window until consecutive lattice points agree; ``method="integrate"``
    integrates from ``z0`` to ``zf`` and fits the Frobenius pair there.
    """
    if method == "frobenius":
        return _frobenius_growth(lam, l, precision_bits, terms)
    if method == "integrate":
        return _integrate_growth(lam, l, precision_bits, z0, zf, terms or 400)
    raise ValueError(f"unknown method {method!r}")


def growth_coefficient(lam, l: int, method: str = "frobenius", **kwargs) -> mpf:
    """Normalized growth coefficient ``K_g / hypot(K_g, K_d)`` of the regular solution.

    It is positive for small ``lam`` and changes sign at every critical intensity.
    """
    return growth_data(lam, l, method, **kwargs).value


def _scan_points(start, stop):
    x = start
    while x <= stop:
        yield x
        x += 0.5 if x < 100 else 2.0


def critical_intensities(l: int, count: int, lambda_max: float = 2000.0, xtol: float = 1e-7,
                         precision_bits: int = 113) -> list:
    """The first ``count`` critical intensities for angular momentum ``l``.

    Scans ``lam`` (step 0.5 below 100, then 2.0), brackets sign changes of
    :func:`growth_coefficient` and refines each by Brent's method to ``xtol``.
    Returns fewer results if ``lambda_max`` is reached first.
    """
    if not isinstance(l, int) or l < 0:
        raise DomainError("l must be a non-negative integer")
    if count < 1:
        return []
    cache = {}

    def g(x):
        if x not in cache:
            cache[x] = growth_coefficient(x, l, precision_bits=precision_bits)
        return cache[x]

    out = []
    prev_x, prev_g = None, None
    for x in _scan_points(0.5, lambda_max):
        gx = g(x)
        if prev_g is not None and (gx > 0) != (prev_g > 0):
            root = brentq(lambda t: float(g(t)), prev_x, x, xtol=xtol, rtol=1e-15)
            with mp.workprec(precision_bits):
                lam_c = to_mpf(root)
            out.append(CriticalResult(l, len(out) + 1, lam_c, g(root)))
            log.info("l=%d critical #%d at lambda=%.6f", l, len(out), root)
            if len(out) == count:
                break
        prev_x, prev_g = x, gx
    return out
