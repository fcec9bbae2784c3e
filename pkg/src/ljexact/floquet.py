"""Floquet (multiplicative) solutions of the radial equation.

A Floquet solution is a Laurent series ``w(z) = z**nu * sum_n c_n z**n`` that
converges on the whole punctured plane.  Its coefficients obey

    eps c_{n-2} + [(n+nu)(n-1+nu) - l(l+1)] c_n + 2 lam c_{n+4} - lam c_{n+10} = 0,

which couples indices of one parity only.  The pair ``(nu, c)`` is found as a
nonlinear eigenproblem: the circuit matrix around the origin seeds ``nu``,
inverse iteration on the truncated banded system seeds ``c`` and a bordered
Newton iteration refines both.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from mpmath import mp, mpc, mpf

from .banded import solve_banded
from .errors import (
    ConvergenceError,
    DegenerateIndexError,
    DivergenceError,
    LJError,
    SingularSystemError,
    WindowExhaustionError,
)
from .numerics import ProblemSpec, to_mpf
from .taylor import propagate

log = logging.getLogger(__name__)

#: |Im nu| above this marks a complex-conjugate pair of indices
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class CircuitMatrix:
    """Monodromy of the basis w_a, w_b (unit Cauchy data at z = 1) around z = 0.

    ``half`` is ``diag(1, -1)`` times the fundamental matrix at ``z = -1``;
    its eigenvalues are ``exp(i pi nu)`` for indices written on the even
    coefficient lattice.
    """

    c11: mpc
    c12: mpc
    c21: mpc
    c22: mpc
    half: tuple
    prec: int

    @property
    def det(self):
        with mp.workprec(self.prec):
            return self.c11 * self.c22 - self.c12 * self.c21

    @property
    def trace(self):
        with mp.workprec(self.prec):
            return self.c11 + self.c22


@dataclass(frozen=True)
class FloquetSolution:
    """Index ``nu`` and Laurent coefficients ``c_n`` for ``n`` in ``[-M, N]``.

    ``coeffs[n + M]`` holds ``c_n``; coefficients whose parity differs from
    ``parity_offset`` are exactly zero.
    """

    nu: mpc
    coeffs: tuple
    window: tuple
    parity_offset: int
    prec: int

    def coeff(self, n):
        M, N = self.window
        if n < -M or n > N:
            return mp.zero
        return self.coeffs[n + M]

    @property
    def indices(self):
        M, N = self.window
        start = -M if (-M - self.parity_offset) % 2 == 0 else -M + 1
        return range(start, N + 1, 2)

    @cached_property
    def log_magnitudes(self):
        """``(n, log|c_n|)`` as float arrays over :attr:`indices`, for cheap error bounds."""
        ns = np.array(list(self.indices), dtype=float)
        with mp.workprec(self.prec):
            logs = [float(mp.log(abs(self.coeff(int(n))))) if self.coeff(int(n)) else -np.inf for n in ns]
        return ns, np.array(logs)

    def peak_index(self):
        return max(self.indices, key=lambda n: abs(self.coeff(n)))

    def scaled(self, factor) -> "FloquetSolution":
        with mp.workprec(self.prec):
            coeffs = tuple(factor * c for c in self.coeffs)
        return FloquetSolution(self.nu, coeffs, self.window, self.parity_offset, self.prec)

    def conjugate(self) -> "FloquetSolution":
        with mp.workprec(self.prec):
            nu = mp.conj(self.nu)
            coeffs = tuple(mp.conj(c) for c in self.coeffs)
        return FloquetSolution(nu, coeffs, self.window, self.parity_offset, self.prec)


@dataclass(frozen=True)
class FloquetPair:
    w1: FloquetSolution
    w2: FloquetSolution
    conjugate_pair: bool


# --------------------------------------------------------------------------
# circuit matrix and starting indices
# --------------------------------------------------------------------------


def circuit_matrix(spec: ProblemSpec, steps: int | None = None) -> CircuitMatrix:
    """Integrate the equation once around the unit circle for two Cauchy data sets.

    ``steps`` is the number of polygon segments (Taylor steps); each step is
    summed to the working precision.
    """
    steps = steps or spec.config.circuit_steps
    if steps < 8 or steps % 2:
        raise ValueError("steps must be an even integer >= 8")
    with spec.workprec():
        points = [mp.expjpi(mpf(2 * k) / steps) for k in range(steps + 1)]
        points[0] = mpc(1)
        start = [(mpc(1), mpc(0)), (mpc(0), mpc(1))]
        end, saved = propagate(spec.lam, spec.centrifugal, spec.eps, points, start, record=[steps // 2])
        (wa, dwa), (wb, dwb) = end
        (ha, dha), (hb, dhb) = saved[steps // 2]
        return CircuitMatrix(wa, wb, dwa, dwb, (ha, hb, -dha, -dhb), spec.precision_bits)


def _eigenvalues(m11, m12, m21, m22):
    # stable pair: the larger root from the formula, the other through the determinant
    tr = m11 + m22
    disc = (m11 - m22) ** 2 + 4 * m12 * m21
    root = mp.sqrt(disc)
    a, b = (tr + root) / 2, (tr - root) / 2
    big = a if abs(a) >= abs(b) else b
    det = m11 * m22 - m12 * m21
    return big, det / big, disc


def _reduce(nu):
    re = mp.re(nu)
    return nu - mp.floor(re)


def initial_indices(C: CircuitMatrix, degeneracy_tol=1e-20):
    """Floquet indices from the eigenvalues ``exp(2 i pi nu)`` of ``C``.

    Real parts are reduced into ``[0, 1)``.  For a complex pair ``nu1`` is
    the index with negative imaginary part; for a real pair ``nu1 < nu2``.
    """
    with mp.workprec(C.prec):
        big, small, disc = _eigenvalues(C.c11, C.c12, C.c21, C.c22)
        scale = (abs(C.c11) + abs(C.c22)) ** 2
        if abs(disc) < degeneracy_tol * scale:
            raise DegenerateIndexError("circuit matrix has a double eigenvalue (logarithmic case)")
        two_pi_i = 2j * mp.pi
        nu_a = _reduce(mp.log(big) / two_pi_i)
        nu_b = _reduce(mp.log(small) / two_pi_i)
        if abs(mp.im(nu_a)) > IMAG_TOL:
            # |big| > 1 means Im(nu) < 0
            return nu_a, nu_b
        nu_a, nu_b = mpc(mp.re(nu_a)), mpc(mp.re(nu_b))
        return (nu_a, nu_b) if mp.re(nu_a) <= mp.re(nu_b) else (nu_b, nu_a)


def index_parity(C: CircuitMatrix, nu) -> int:
    """Parity class of the coefficient lattice carrying the solution of index ``nu``.

    Returns 0 when ``exp(i pi nu)`` is an eigenvalue of the half-turn matrix
    (even ``n`` carry the coefficients) and 1 otherwise.
    """
    with mp.workprec(C.prec):
        h11, h12, h21, h22 = C.half
        e1, e2, _ = _eigenvalues(h11, h12, h21, h22)
        target = mp.expjpi(nu)
        d_even = min(abs(e1 - target), abs(e2 - target))
        d_odd = min(abs(e1 + target), abs(e2 + target))
        return 0 if d_even <= d_odd else 1


# --------------------------------------------------------------------------
# truncated banded system
# --------------------------------------------------------------------------


def _lattice(spec: ProblemSpec, parity: int):
    start = -spec.M if (-spec.M - parity) % 2 == 0 else -spec.M + 1
    return list(range(start, spec.N + 1, 2))


def _diag(spec, nu, n):
    return (n + nu) * (n - 1 + nu) - spec.centrifugal


def _rows(spec: ProblemSpec, nu, ns):
    K = len(ns)
    eps, lam = spec.eps, spec.lam
    two_lam = 2 * lam
    rows = []
    for i, n in enumerate(ns):
        r = {i: _diag(spec, nu, n)}
        if i >= 1 and eps:
            r[i - 1] = eps
        if i + 2 < K:
            r[i + 2] = two_lam
        if i + 5 < K:
            r[i + 5] = -lam
        rows.append(r)
    return rows


def _normalize(vec):
    s = mp.sqrt(mp.fsum(abs(x) ** 2 for x in vec))
    if not s:
        raise SingularSystemError("null vector vanished")
    return [x / s for x in vec]


def _to_window(spec, ns, vec):
    full = [mp.zero] * (spec.M + spec.N + 1)
    for n, v in zip(ns, vec):
        full[n + spec.M] = v
    return tuple(full)


def initial_coefficients(spec: ProblemSpec, nu0, parity: int = 0):
    """Approximate null vector of the truncated system at ``nu0``.

    Two inverse-iteration sweeps with the banded LU; the result obeys
    ``sum |c_n|^2 = 1`` and is returned over the full window ``[-M, N]``.
    """
    with spec.workprec():
        nu0 = mpc(nu0)
        ns = _lattice(spec, parity)
        vec = [mpc(1)] * len(ns)
        for _ in range(2):
            vec = _normalize(solve_banded(_rows(spec, nu0, ns), vec, kl=1))
        for v in vec:
            if not mp.isfinite(v):
                raise SingularSystemError("truncated system is numerically singular")
        return _to_window(spec, ns, vec)


def _tail_threshold(spec, nu, ns):
    bound = 4 * (abs(spec.eps) + 3 * spec.lam)
    right = None
    for n in reversed(ns):
        if n < 0 or abs(_diag(spec, nu, n)) < bound:
            break
        right = n
    left = None
    for n in ns:
        if n > 0 or abs(_diag(spec, nu, n)) < bound:
            break
        left = n
    return left, right


def _resolve_tails(spec, nu, ns, vec):
    """Recompute both coefficient tails from their own (diagonally dominant) rows."""
    eps, lam = spec.eps, spec.lam
    pos = {n: i for i, n in enumerate(ns)}
    left, right = _tail_threshold(spec, nu, ns)
    out = list(vec)
    if right is not None and ns[-1] - right >= 20:
        tail = [n for n in ns if n >= right]
        idx = {n: i for i, n in enumerate(tail)}
        rows, rhs = [], []
        for n in tail:
            r = {idx[n]: _diag(spec, nu, n)}
            b = mp.zero
            if n - 2 in idx:
                r[idx[n - 2]] = eps
            elif n - 2 in pos:
                b -= eps * out[pos[n - 2]]
            if n + 4 in idx:
                r[idx[n + 4]] = 2 * lam
            if n + 10 in idx:
                r[idx[n + 10]] = -lam
            rows.append(r)
            rhs.append(b)
        for n, v in zip(tail, solve_banded(rows, rhs, kl=1)):
            out[pos[n]] = v
    if left is not None and left - ns[0] >= 20:
        tail = [n for n in ns if n <= left]
        idx = {n: i for i, n in enumerate(tail)}
        rows, rhs = [], []
        for n in tail:
            r = {idx[n]: _diag(spec, nu, n)}
            b = mp.zero
            if n - 2 in idx:
                r[idx[n - 2]] = eps
            for off, co in ((4, 2 * lam), (10, -lam)):
                if n + off in idx:
                    r[idx[n + off]] = co
                elif n + off in pos:
                    b -= co * out[pos[n + off]]
            rows.append(r)
            rhs.append(b)
        for n, v in zip(tail, solve_banded(rows, rhs, kl=1)):
            out[pos[n]] = v
    return out


def recurrence_residual(spec: ProblemSpec, sol: FloquetSolution):
    """Largest residual of the Laurent recurrence over the window, relative to max |c_n|."""
    with spec.workprec():
        c = sol.coeff
        worst = mp.zero
        for n in sol.indices:
            r = spec.eps * c(n - 2) + _diag(spec, sol.nu, n) * c(n) + 2 * spec.lam * c(n + 4) - spec.lam * c(n + 10)
            worst = max(worst, abs(r))
        peak = max(abs(x) for x in sol.coeffs)
        return worst / peak


def _residual_tol(spec):
    # the configured tolerance refers to 113-bit arithmetic; scale with the unit roundoff
    return mpf(spec.config.residual_tol) * mpf(2) ** (113 - spec.precision_bits)


def newton_refine(spec: ProblemSpec, nu0, c0, parity: int = 0, max_iter: int | None = None) -> FloquetSolution:
    """Refine ``(nu0, c0)`` by the bordered Newton iteration.

    Each step solves ``A(nu) c' + (2n - 1 + 2 nu) c_n (nu' - nu) = 0`` with
    the side condition ``sum conj(c_n) c'_n = 1``.  Once ``|nu' - nu|`` drops
    below ``newton_tol`` at most three polishing steps bring the correction
    down to the working precision; the coefficient tails are then
    re-solved, the vector normalized and rotated so that the coefficient of
    largest magnitude is real and positive.
    """
    cfg = spec.config
    max_iter = max_iter or cfg.newton_max_iter
    with spec.workprec():
        ns = _lattice(spec, parity)
        nu = mpc(nu0)
        c = [mpc(c0[n + spec.M]) for n in ns]
        c = _normalize(c)
        tol = mpf(cfg.newton_tol)
        # after the stopping rule fires, polish down to the working precision
        floor = mpf(2) ** (16 - spec.precision_bits) * max(1, abs(nu))
        growing = 0
        last = None
        converged = False
        polish = 0
        for it in range(max_iter):
            g = [(2 * n - 1 + 2 * nu) * cn for n, cn in zip(ns, c)]
            y = solve_banded(_rows(spec, nu, ns), g, kl=1)
            s = mp.fsum(mp.conj(a) * b for a, b in zip(c, y))
            if not s or not mp.isfinite(s):
                raise SingularSystemError("Newton step produced a singular border")
            delta = -1 / s
            # the step length scales with 1/|c|^2, so keep c on the unit sphere
            c = _normalize([-delta * v for v in y])
            nu = nu + delta
            size = abs(delta)
            log.debug("newton it=%d |dnu|=%s", it, mp.nstr(size, 5))
            if converged:
                polish += 1
                if size <= floor or polish >= 3:
                    break
                continue
            if size < tol:
                converged = True
                if size <= floor:
                    break
                continue
            if last is not None and size > last:
                growing += 1
                if growing >= 3:
                    raise DivergenceError("Newton corrections grew for 3 consecutive steps")
            else:
                growing = 0
            last = size
        if not converged:
            raise ConvergenceError(f"Newton iteration did not converge in {max_iter} steps")
        c = _resolve_tails(spec, nu, ns, c)
        c = _normalize(c)
        peak = max(c, key=abs)
        c = [x * (abs(peak) / peak) for x in c]
        sol = FloquetSolution(nu, _to_window(spec, ns, c), (spec.M, spec.N), parity, spec.precision_bits)
        _check_solution(spec, sol)
        return sol


def _check_solution(spec, sol):
    res = recurrence_residual(spec, sol)
    if res > _residual_tol(spec):
        raise ConvergenceError(f"recurrence residual {mp.nstr(res, 3)} above tolerance")
    peak = max(abs(x) for x in sol.coeffs)
    edge = max(abs(sol.coeff(sol.indices[0])), abs(sol.coeff(sol.indices[-1])))
    if edge > spec.config.edge_tol * peak:
        raise WindowExhaustionError(
            f"edge coefficient {mp.nstr(edge / peak, 3)} relative to peak: enlarge M, N"
        )


def _solve_from_circuit(spec, C, nu):
    parity = index_parity(C, nu)
    c0 = initial_coefficients(spec, nu, parity)
    return newton_refine(spec, nu, c0, parity)


def _pair_from_circuit(spec: ProblemSpec) -> FloquetPair:
    C = circuit_matrix(spec)
    nu1, nu2 = initial_indices(C, spec.config.degeneracy_tol)
    w1 = _solve_from_circuit(spec, C, nu1)
    if abs(mp.im(w1.nu)) > IMAG_TOL:
        return FloquetPair(w1, w1.conjugate(), True)
    w2 = _solve_from_circuit(spec, C, nu2)
    return FloquetPair(w1, w2, False)


def _compatible(spec, seed: FloquetPair):
    # a seed from another precision is fine: Newton converts and re-converges
    return seed.w1.window == (spec.M, spec.N)


def _pair_from_seed(spec: ProblemSpec, seed: FloquetPair) -> FloquetPair:
    w1 = newton_refine(spec, seed.w1.nu, seed.w1.coeffs, seed.w1.parity_offset)
    if abs(mp.re(w1.nu) - mp.re(seed.w1.nu)) > 0.2 or abs(mp.im(w1.nu) - mp.im(seed.w1.nu)) > 0.5:
        raise ConvergenceError("continuation jumped to another index")
    if seed.conjugate_pair:
        if not mp.im(w1.nu) < -IMAG_TOL:
            raise ConvergenceError("continuation left the complex-index regime")
        return FloquetPair(w1, w1.conjugate(), True)
    w2 = newton_refine(spec, seed.w2.nu, seed.w2.coeffs, seed.w2.parity_offset)
    for w in (w1, w2):
        if abs(mp.im(w.nu)) > IMAG_TOL or not 0 <= mp.re(w.nu) < 1:
            raise ConvergenceError("continuation left the real-index regime")
    if abs(w1.nu - w2.nu) < 1e-6 or not mp.re(w1.nu) < mp.re(w2.nu):
        raise ConvergenceError("continuation merged or swapped the indices")
    return FloquetPair(w1, w2, False)


def floquet_pair(spec: ProblemSpec, seed: FloquetPair | None = None) -> FloquetPair:
    """Both Floquet solutions at ``spec``.

    With a ``seed`` pair from a nearby energy the Newton iteration starts from
    it; if that fails the circuit matrix is used.  For complex indices the
    second solution is the complex conjugate of the first.
    """
    if seed is not None and _compatible(spec, seed):
        try:
            return _pair_from_seed(spec, seed)
        except LJError as exc:
            log.debug("continuation failed (%s); falling back to circuit matrix", exc)
    return _pair_from_circuit(spec)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def _window_indices(sol, truncation):
    M, N = sol.window
    if truncation is None:
        lo, hi = -M, N
    elif isinstance(truncation, int):
        lo, hi = -truncation, truncation
    else:
        lo, hi = truncation
    if lo < -M or hi > N:
        raise ValueError("truncation window must lie inside the stored window")
    return [n for n in sol.indices if lo <= n <= hi]


def floquet_terms(sol: FloquetSolution, z, truncation=None, derivative=False):
    """Value (and derivative) of the Laurent series with a relative error estimate.

    The estimate combines the coefficient roundoff amplified by the largest
    term and the size of the two outermost terms (truncation).
    """
    with mp.workprec(sol.prec):
        z = to_mpf(z)
        ns = _window_indices(sol, truncation)
        z2 = z * z
        p = z ** ns[0]
        terms, dterms = [], []
        for n in ns:
            t = sol.coeff(n) * p
            terms.append(t)
            if derivative:
                dterms.append((n + sol.nu) * t)
            p *= z2
        zn = z ** sol.nu
        value = zn * mp.fsum(terms)
        u = mpf(2) ** (-sol.prec)
        all_n, logs = sol.log_magnitudes
        inside = (all_n >= ns[0]) & (all_n <= ns[-1])
        big = mp.exp(float(np.max(logs[inside] + all_n[inside] * float(mp.log(z)))))
        edge = abs(terms[0]) + abs(terms[-1])
        scale = abs(zn)
        est = (16 * u * len(terms) ** 0.5 * big + edge) * scale / abs(value) if value else mp.inf
        if not derivative:
            return value, est
        dvalue = zn * mp.fsum(dterms) / z
        return value, dvalue, est


def evaluate_floquet(sol: FloquetSolution, z, truncation=None):
    """``z**nu * sum c_n z**n`` over ``truncation`` (default: the full window)."""
    return floquet_terms(sol, z, truncation)[0]


def floquet_wronskian(w1: FloquetSolution, w2: FloquetSolution, z=1):
    """``W[w1, w2](z) = w1 w2' - w1' w2`` from the Laurent series."""
    prec = max(w1.prec, w2.prec)
    with mp.workprec(prec):
        a, da, _ = floquet_terms(w1, z, derivative=True)
        b, db, _ = floquet_terms(w2, z, derivative=True)
        return a * db - da * b
