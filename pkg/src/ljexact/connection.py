"""Connection factors between the Floquet and the Thome solutions.

Each connection factor is a ratio of Wronskians.  The Wronskian of a Floquet
solution with a Thome solution is a constant; written through the
coefficients ``c_n`` it becomes a lattice function ``gamma_n`` that obeys a
first-order (infinity) or fifth-order (origin) difference equation.  Matching
``gamma_n`` to Heaviside's exponential series isolates the constant.  The
Stokes-ray solutions ``w4`` and ``w6`` take the average of the two adjacent
sectors, which introduces the ``cos(pi * nu)`` style factors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp, mpf

from .errors import InconsistencyError, WindowExhaustionError
from .floquet import FloquetPair, FloquetSolution
from .numerics import ProblemSpec, require_bound_energy
from .thome import ThomeInfinity, ThomeOrigin, thome_infinity, thome_origin

#: number of consecutive negligible terms that ends a gamma sum
QUIET_TERMS = 8


@dataclass(frozen=True)
class GammaValue:
    """``gamma_n`` for Floquet label ``i`` and Thome label ``target``.

    ``scale`` is the largest term of the sum, a measure of cancellation.
    """

    i: int
    target: int
    n: int
    value: complex
    scale: mpf = field(default=mp.zero, compare=False)


@dataclass(frozen=True)
class ConnectionFactors:
    """``t[(i, j)]`` with ``w_i ~ T_{i,j} w_j + T_{i,j'} w_j'`` near each singular point.

    ``spread`` records the relative disagreement of each Wronskian across the
    lattice points used to extract it.
    """

    t: dict
    w34: complex
    w56: complex
    spread: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.t[key]

    def row(self, i):
        return tuple(self.t[(i, j)] for j in (3, 4, 5, 6))


def _coefficient(series, m):
    return series[m] if m < len(series) else None


def _sum_terms(term, m_max, tol):
    """Sum ``term(m)`` for ``m = 0..m_max`` until QUIET_TERMS terms are negligible."""
    u = mpf(2) ** (-mp.prec)
    total, peak, quiet, last = mp.zero, mp.zero, 0, mp.zero
    for m in range(m_max + 1):
        t = term(m)
        if t is None:
            raise WindowExhaustionError("Thome series too short for the gamma sum; raise thome_terms")
        total += t
        last = abs(t)
        peak = max(peak, last)
        quiet = quiet + 1 if last <= u * peak else 0
        if quiet >= QUIET_TERMS:
            return total, peak
    if last > tol * peak:
        raise WindowExhaustionError("gamma sum reached the edge of the Floquet window; enlarge M, N")
    return total, peak


def gamma_infinity(w: FloquetSolution, t: ThomeInfinity, n: int, i: int = 1, tol=1e-14) -> GammaValue:
    """``gamma_n = sum_m a_m (alpha c_{n+m} - (n + 2m + 1 + nu) c_{n+m+1})``.

    The lattice function obeys ``(n + 1 + nu) gamma_{n+1} + alpha gamma_n = 0``.
    """
    M, N = w.window
    if n < -M or n + 1 > N:
        raise WindowExhaustionError(f"n={n} outside the Floquet window")
    with mp.workprec(max(w.prec, t.prec)):
        nu, alpha, c = w.nu, t.alpha, w.coeff

        def term(m):
            a = _coefficient(t.a, m)
            if a is None:
                return None
            return a * (alpha * c(n + m) - (n + 2 * m + 1 + nu) * c(n + m + 1))

        value, peak = _sum_terms(term, N - n - 1, tol)
    return GammaValue(i, t.which, n, value, peak)


def gamma_origin(w: FloquetSolution, t: ThomeOrigin, n: int, i: int = 1, tol=1e-14) -> GammaValue:
    """``gamma_n = sum_m b_m (-beta c_{n-m+6} + (-n + 2m - 1 - nu + rho) c_{n-m+1})``.

    The lattice function obeys ``(n - 5 + nu + rho) gamma_{n-5} - beta gamma_n = 0``.
    """
    M, N = w.window
    if n + 6 > N or n + 1 < -M:
        raise WindowExhaustionError(f"n={n} outside the Floquet window")
    with mp.workprec(max(w.prec, t.prec)):
        nu, beta, rho, c = w.nu, t.beta, t.rho, w.coeff

        def term(m):
            b = _coefficient(t.b, m)
            if b is None:
                return None
            return b * (-beta * c(n - m + 6) + (-n + 2 * m - 1 - nu + rho) * c(n - m + 1))

        value, peak = _sum_terms(term, n + 1 + M, tol)
    return GammaValue(i, t.which, n, value, peak)


# --------------------------------------------------------------------------
# Wronskians
# --------------------------------------------------------------------------


def _near_pole(x):
    return mp.re(x) <= 0.5 and abs(x - mp.nint(mp.re(x))) < 1e-8


def _default_points(w: FloquetSolution, origin: bool):
    peak = w.peak_index()
    if origin:
        centre = int(mp.nint(mpf(-peak) / 5))
        return [centre - 1, centre, centre + 1]
    return [peak - 2, peak, peak + 2]


def _origin_edge_term(w, t, k):
    """Largest of the last two terms of the origin gamma sum at ``k`` (window edge)."""
    M = w.window[0]
    nu, beta, rho, c = w.nu, t.beta, t.rho, w.coeff
    out = mp.zero
    for m in (k + M, k + M + 1):
        if 0 <= m < len(t.b):
            out = max(out, abs(t.b[m] * (-beta * c(k - m + 6) + (-k + 2 * m - 1 - nu + rho) * c(k - m + 1))))
    return out


def origin_points(w: FloquetSolution, t: ThomeOrigin):
    """Three consecutive lattice points minimizing the window-edge truncation error.

    The origin gamma sums run down to ``c_{-M}``; the error each leaves in
    the Wronskian is the edge term times its Gamma prefactor, which is cheap
    to evaluate for every candidate ``n``.
    """
    M = w.window[0]
    # only the order of magnitude matters, so double precision suffices
    with mp.workprec(53):
        base = abs(t.beta) / 5
        deltas = [(-w.nu - t.rho + L) / 5 for L in range(5)]
        best, best_n = None, None
        for n in range(-2, (M - 10) // 5 - 1):
            if any(_near_pole(n + j + 1 + d) for d in deltas for j in (-1, 0, 1)):
                continue
            est = max(
                abs(mp.gamma(n + 1 + d) / mp.power(base, n + d)) * _origin_edge_term(w, t, -5 * n - L)
                for L, d in enumerate(deltas)
            )
            if best is None or est < best:
                best, best_n = est, n
    if best_n is None:
        return _default_points(w, True)
    return [best_n - 1, best_n, best_n + 1]


def _consistent(values, tol, what):
    mean = mp.fsum(values) / len(values)
    spread = max(abs(v - mean) for v in values) / abs(mean) if mean else mp.inf
    if spread > tol:
        raise InconsistencyError(f"{what}: relative spread {mp.nstr(spread, 3)} across lattice points")
    return mean, spread


def _infinity_points(w, ns):
    """``ns`` without points next to a pole of ``Gamma(n + 1 + nu)``.

    For a nearly integer index every negative point may be excluded; the
    formula holds at any lattice point, so move up to the first admissible ones.
    """
    ok = [n for n in ns if not _near_pole(n + 1 + w.nu)]
    if ok:
        return ok
    n = max(ns)
    while _near_pole(n + 1 + w.nu):
        n += 1
    return [n, n + 2, n + 4]


def _infinity_wronskian(w, t, ns, tol, stokes):
    with mp.workprec(max(w.prec, t.prec)):
        nu, alpha = w.nu, t.alpha
        base = abs(alpha)
        values = []
        for n in _infinity_points(w, ns):
            g = gamma_infinity(w, t, n).value
            v = mp.gamma(n + 1 + nu) / mp.power(base, n + nu) * g
            if stokes:
                v *= (-1) ** n * mp.cospi(nu)
            values.append(v)
        if not values:
            raise InconsistencyError("no admissible lattice point for the Wronskian")
        return _consistent(values, tol, f"W[w, w{t.which}]")


def _origin_wronskian(w, t, ns, tol, stokes):
    with mp.workprec(max(w.prec, t.prec)):
        nu, beta = w.nu, t.beta
        base = abs(beta) / 5
        values = []
        for n in ns:
            deltas = [(-nu - t.rho + L) / 5 for L in range(5)]
            if any(_near_pole(n + 1 + d) for d in deltas):
                continue
            s = []
            for L, d in enumerate(deltas):
                g = gamma_origin(w, t, -5 * n - L).value
                term = mp.gamma(n + 1 + d) / mp.power(base, n + d) * g
                if stokes:
                    term *= mp.cospi(d)
                s.append(term)
            v = mp.fsum(s)
            if stokes:
                v *= (-1) ** n
            values.append(v)
        if not values:
            raise InconsistencyError("no admissible lattice point for the Wronskian")
        return _consistent(values, tol, f"W[w, w{t.which}]")


def wronskian_regular_infinity(w_i: FloquetSolution, w3: ThomeInfinity, ns=None, tol=1e-8, spread=False):
    """``W[w_i, w3] = Gamma(n + 1 + nu) / (-alpha3)**(n + nu) * gamma_n``, checked over ``ns``.

    Requires ``alpha3 < 0``.  Returns the mean over the lattice points (and
    the relative spread when ``spread`` is true).
    """
    if not w3.alpha < 0:
        raise ValueError("w3 must be the subdominant solution at infinity (alpha < 0)")
    v, s = _infinity_wronskian(w_i, w3, ns or _default_points(w_i, False), tol, stokes=False)
    return (v, s) if spread else v


def wronskian_stokes_infinity(w_i: FloquetSolution, w4: ThomeInfinity, ns=None, tol=1e-8, spread=False):
    """``W[w_i, w4] = (-1)**n cos(pi nu) Gamma(n + 1 + nu) / alpha4**(n + nu) * gamma_n``."""
    if not w4.alpha > 0:
        raise ValueError("w4 must be the dominant solution at infinity (alpha > 0)")
    v, s = _infinity_wronskian(w_i, w4, ns or _default_points(w_i, False), tol, stokes=True)
    return (v, s) if spread else v


def wronskian_regular_origin(w_i: FloquetSolution, w5: ThomeOrigin, ns=None, tol=1e-8, spread=False):
    """``W[w_i, w5] = sum_L Gamma(n + 1 + d_L) / (-beta5/5)**(n + d_L) * gamma_{-5n-L}``.

    ``d_L = (-nu - rho + L) / 5`` for ``L = 0..4``; requires ``beta5 < 0``.
    """
    if not w5.beta < 0:
        raise ValueError("w5 must be the subdominant solution at the origin (beta < 0)")
    v, s = _origin_wronskian(w_i, w5, ns or origin_points(w_i, w5), tol, stokes=False)
    return (v, s) if spread else v


def wronskian_stokes_origin(w_i: FloquetSolution, w6: ThomeOrigin, ns=None, tol=1e-8, spread=False):
    """``W[w_i, w6] = (-1)**n sum_L cos(pi d_L) Gamma(n + 1 + d_L) / (beta6/5)**(n + d_L) * gamma_{-5n-L}``."""
    if not w6.beta > 0:
        raise ValueError("w6 must be the dominant solution at the origin (beta > 0)")
    v, s = _origin_wronskian(w_i, w6, ns or origin_points(w_i, w6), tol, stokes=True)
    return (v, s) if spread else v


def thome_set(spec: ProblemSpec, terms: int | None = None):
    """The four Thome series with enough terms for the gamma sums over the window."""
    terms = terms or max(spec.thome_terms, spec.M + spec.N + 20)
    return (
        thome_infinity(spec, 3, terms),
        thome_infinity(spec, 4, terms),
        thome_origin(spec, 5, terms),
        thome_origin(spec, 6, terms),
    )


def _factor_row(w, series, tol, w34, w56):
    w3, w4, w5, w6 = series
    W3, s3 = wronskian_regular_infinity(w, w3, tol=tol, spread=True)
    W4, s4 = wronskian_stokes_infinity(w, w4, tol=tol, spread=True)
    W5, s5 = wronskian_regular_origin(w, w5, tol=tol, spread=True)
    W6, s6 = wronskian_stokes_origin(w, w6, tol=tol, spread=True)
    row = {3: W4 / w34, 4: -W3 / w34, 5: W6 / w56, 6: -W5 / w56}
    return row, {3: s4, 4: s3, 5: s6, 6: s5}


def connection_factors(spec: ProblemSpec, pair: FloquetPair, series=None) -> ConnectionFactors:
    """All eight ``T_{i,j}`` from ``W[w_i, w_j'] / W[w_j, w_j']``.

    ``W[w3, w4] = 2 sqrt(-eps)`` and ``W[w5, w6] = -2 sqrt(lam)``.  In the
    conjugate case the second row is the conjugate of the first.
    """
    require_bound_energy(spec)
    tol = spec.config.wronskian_tol
    series = series or thome_set(spec)
    with spec.workprec():
        w34 = 2 * mp.sqrt(-spec.eps)
        w56 = -2 * mp.sqrt(spec.lam)
        row1, sp1 = _factor_row(pair.w1, series, tol, w34, w56)
        if pair.conjugate_pair:
            row2 = {j: mp.conj(v) for j, v in row1.items()}
            sp2 = dict(sp1)
        else:
            row2, sp2 = _factor_row(pair.w2, series, tol, w34, w56)
    t = {(1, j): v for j, v in row1.items()}
    t.update({(2, j): v for j, v in row2.items()})
    spread = {(1, j): v for j, v in sp1.items()}
    spread.update({(2, j): v for j, v in sp2.items()})
    return ConnectionFactors(t, w34, w56, spread)
