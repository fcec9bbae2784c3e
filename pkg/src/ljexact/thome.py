"""Thome formal solutions at the two irregular singular points.

At infinity (rank 1)::

    w_j(z) ~ exp(alpha_j z) * sum_m a_m z**(-m),   j = 3, 4

and at the origin (rank 5)::

    w_k(z) ~ exp(beta_k z**-5 / 5) * z**3 * sum_m b_m z**m,   k = 5, 6

Both series diverge in general and are summed up to their smallest term.
"""
from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .numerics import ProblemSpec, exponent_coefficients, require_bound_energy, to_mpf


@dataclass(frozen=True)
class ThomeInfinity:
    alpha: mpf
    a: tuple
    which: int
    lam: mpf
    l: int
    prec: int


@dataclass(frozen=True)
class ThomeOrigin:
    beta: mpf
    b: tuple
    which: int
    lam: mpf
    l: int
    eps: mpf
    prec: int
    rho: int = 3


def infinity_coefficients(alpha, lam, l, terms):
    """a_0 = 1 and 2 alpha m a_m = [m(m-1) - l(l+1)] a_{m-1} + 2 lam a_{m-5} - lam a_{m-11}."""
    cent = l * (l + 1)
    a = [mpf(1)]
    for m in range(1, terms + 1):
        s = (m * (m - 1) - cent) * a[m - 1]
        if m >= 5:
            s += 2 * lam * a[m - 5]
        if m >= 11:
            s -= lam * a[m - 11]
        a.append(s / (2 * alpha * m))
    return a


def origin_coefficients(beta, lam, l, eps, terms):
    """b_0 = 1 and 2 beta m b_m = 2 lam b_{m-1} + [(m-3)(m-2) - l(l+1)] b_{m-5} + eps b_{m-7}."""
    cent = l * (l + 1)
    b = [mpf(1)]
    for m in range(1, terms + 1):
        s = 2 * lam * b[m - 1]
        if m >= 5:
            s += ((m - 3) * (m - 2) - cent) * b[m - 5]
        if m >= 7 and eps:
            s += eps * b[m - 7]
        b.append(s / (2 * beta * m))
    return b


def thome_infinity(spec: ProblemSpec, which: int, terms: int | None = None) -> ThomeInfinity:
    """Formal solution w3 (decaying, ``which=3``) or w4 (growing, ``which=4``)."""
    if which not in (3, 4):
        raise ValueError("which must be 3 or 4")
    require_bound_energy(spec)
    ex = exponent_coefficients(spec)
    alpha = ex.alpha3 if which == 3 else ex.alpha4
    with spec.workprec():
        a = infinity_coefficients(alpha, spec.lam, spec.l, terms or spec.thome_terms)
    return ThomeInfinity(alpha, tuple(a), which, spec.lam, spec.l, spec.precision_bits)


def thome_origin(spec: ProblemSpec, which: int, terms: int | None = None) -> ThomeOrigin:
    """Formal solution w5 (``which=5``, beta < 0) or w6 (``which=6``); eps = 0 allowed."""
    if which not in (5, 6):
        raise ValueError("which must be 5 or 6")
    ex = exponent_coefficients(spec)
    beta = ex.beta5 if which == 5 else ex.beta6
    with spec.workprec():
        b = origin_coefficients(beta, spec.lam, spec.l, spec.eps, terms or spec.thome_terms)
    return ThomeOrigin(beta, tuple(b), which, spec.lam, spec.l, spec.eps, spec.precision_bits)


def _optimal_sum(coeffs, x):
    """Sum ``coeffs[m] x**m`` up to (excluding) the smallest nonzero term.

    Returns ``(sum, derivative_sum, estimate)`` where the derivative sum is
    ``sum m coeffs[m] x**(m-1)`` over the same terms and ``estimate`` is the
    magnitude of the first omitted term relative to the partial sum.
    """
    terms = []
    p = mpf(1)
    for c in coeffs:
        terms.append(c * p)
        p *= x
    mags = [abs(t) for t in terms]
    nonzero = [m for m in range(1, len(terms)) if mags[m] != 0]
    if not nonzero:
        return terms[0], mp.zero, mp.zero
    cut = min(nonzero, key=lambda m: mags[m])
    if cut == len(terms) - 1:
        # still decreasing at the last stored coefficient: keep everything
        cut = len(terms)
    s = mp.fsum(terms[:cut])
    ds = mp.fsum(m * coeffs[m] * x ** (m - 1) for m in range(1, cut))
    last = mags[cut] if cut < len(terms) else mags[-1]
    return s, ds, (last / abs(s)) if s else mp.inf


def evaluate_thome_infinity(series: ThomeInfinity, z, derivative: bool = False):
    """Evaluate ``exp(alpha z) sum a_m z^-m`` at ``z > 0`` with optimal truncation.

    Returns ``(value, estimate)`` or ``(value, dvalue, estimate)`` when
    ``derivative`` is set.
    """
    with mp.workprec(series.prec):
        z = to_mpf(z)
        x = 1 / z
        s, ds, est = _optimal_sum(series.a, x)
        e = mp.exp(series.alpha * z)
        value = e * s
        if not derivative:
            return value, est
        # d/dz [e S(1/z)] = e (alpha S - S'(1/z) / z^2)
        dvalue = e * (series.alpha * s - ds * x * x)
        return value, dvalue, est


def evaluate_thome_origin(series: ThomeOrigin, z, derivative: bool = False):
    """Evaluate ``exp(beta z^-5/5) z^3 sum b_m z^m`` at ``z > 0`` with optimal truncation."""
    with mp.workprec(series.prec):
        z = to_mpf(z)
        s, ds, est = _optimal_sum(series.b, z)
        e = mp.exp(series.beta / (5 * z ** 5)) * z ** series.rho
        value = e * s
        if not derivative:
            return value, est
        # log-derivative of the prefactor: -beta z^-6 + rho / z
        dvalue = value * (-series.beta / z ** 6 + series.rho / z) + e * ds
        return value, dvalue, est
