"""Taylor-series propagation of the radial equation in the complex plane.

Multiplying the equation by z**10 gives

    z**12 w'' = (lam - 2 lam z**6 + l(l+1) z**10 - eps z**12) w,

whose coefficients are polynomials, so Taylor coefficients about any point
z0 != 0 follow from a short linear recurrence.  Each step sums the series to
the working precision; the step is valid while |h| < |z0|.
"""
from __future__ import annotations

from mpmath import mp, mpf

from .errors import IntegrationError

MAX_TERMS = 3000


def _expand(z0, degree, scale):
    # coefficients of scale * (z0 + h)**degree in powers of h
    out = []
    for j in range(degree + 1):
        out.append(scale * mp.binomial(degree, j) * z0 ** (degree - j))
    return out


def _local_polynomials(lam, cent, eps, z0):
    P = _expand(z0, 12, 1)
    R = [mp.zero] * 13
    R[0] += lam
    for j, v in enumerate(_expand(z0, 6, -2 * lam)):
        R[j] += v
    if cent:
        for j, v in enumerate(_expand(z0, 10, cent)):
            R[j] += v
    if eps:
        for j, v in enumerate(_expand(z0, 12, -eps)):
            R[j] += v
    return P, R


def taylor_step(lam, cent, eps, z0, z1, states, tol=None):
    """Advance ``(w, w')`` pairs from ``z0`` to ``z1``.

    ``cent`` is l(l+1).  ``tol`` defaults to the unit roundoff.
    """
    h = z1 - z0
    if abs(h) >= abs(z0):
        raise IntegrationError("Taylor step reaches the singular point z = 0")
    if tol is None:
        tol = mpf(2) ** (-mp.prec)
    P, R = _local_polynomials(lam, cent, eps, z0)
    out = []
    for w, dw in states:
        t = [w, dw]
        val = w + dw * h
        der = dw
        hpow = h  # h**(k-1) for the term of index k
        quiet = 0
        K = 0
        while True:
            s = mp.zero
            top = min(12, K)
            for j in range(top + 1):
                s += R[j] * t[K - j]
            for j in range(1, top + 1):
                s -= P[j] * ((K - j + 2) * (K - j + 1)) * t[K - j + 2]
            tk = s / (P[0] * ((K + 2) * (K + 1)))
            t.append(tk)
            k = K + 2
            dterm = k * tk * hpow
            hpow *= h
            term = tk * hpow
            val += term
            der += dterm
            if abs(term) <= tol * abs(val) and abs(dterm) <= tol * abs(der):
                quiet += 1
                if quiet >= 4 and K >= 12:
                    break
            else:
                quiet = 0
            K += 1
            if K > MAX_TERMS:
                raise IntegrationError("Taylor series did not converge within the step")
        out.append((val, der))
    return out


def propagate(lam, cent, eps, points, states, record=(), tol=None):
    """Propagate ``states`` along the polygon ``points``.

    Returns the final states and a dict ``{index: states}`` for every point
    index listed in ``record``.
    """
    saved = {}
    record = set(record)
    for i in range(1, len(points)):
        states = taylor_step(lam, cent, eps, points[i - 1], points[i], states, tol)
        if i in record:
            saved[i] = states
    return states, saved
