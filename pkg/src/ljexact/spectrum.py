"""Bound states: quantization, mixing coefficients and normalized wave functions.

A bound state is the combination ``A1 w1 + A2 w2`` of the Floquet solutions
that is proportional to the decaying Thome solution at both singular points.
With ``A1 T13 + A2 T23 = 1`` this fixes

    A1 = T24 / (T13 T24 - T23 T14),    A2 = -T14 / (T13 T24 - T23 T14)

and the energy must satisfy ``T14 T26 - T24 T16 = 0``.
"""
from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field, replace

from mpmath import mp, mpf
from scipy.optimize import brentq

from .connection import ConnectionFactors, connection_factors
from .errors import (
    DegenerateIndexError,
    LJError,
    NoSignChangeError,
    PrecisionExhaustionError,
    QuadratureError,
    SingularSystemError,
)
from .floquet import FloquetPair, floquet_pair, floquet_terms, floquet_wronskian
from .numerics import ProblemSpec, SolverConfig, make_problem
from .thome import (
    ThomeInfinity,
    ThomeOrigin,
    evaluate_thome_infinity,
    evaluate_thome_origin,
    thome_infinity,
    thome_origin,
)

log = logging.getLogger(__name__)

#: precision used when the Laurent region cannot bridge the two asymptotic ones
ESCALATED_BITS = 237
# the left Laurent tail limits the middle region near the origin, so widen it too;
# the window grows like sqrt(lam / 40) and is doubled once more if still too short
ESCALATED_WINDOW = 540
#: exclusion step around a degenerate (logarithmic) index point
DEGENERATE_STEP = 1e-6


# --------------------------------------------------------------------------
# quantization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantizationPoint:
    """Everything computed while evaluating the quantization function at one energy."""

    spec: ProblemSpec
    pair: FloquetPair
    factors: ConnectionFactors
    value: mpf
    w12: complex


def quantization_point(spec: ProblemSpec, seed: FloquetPair | None = None) -> QuantizationPoint:
    """Evaluate ``Re[(T14 T26 - T24 T16) / W[w1, w2]]`` at ``spec``.

    The combination equals ``W[w3, w5] / (W[w4, w3] W[w6, w5])``: it is real,
    independent of how the Floquet solutions are labelled or scaled, and
    continuous where the indices pass from a real to a complex pair.  Its
    zeros are the bound-state energies.
    """
    pair = floquet_pair(spec, seed)
    factors = connection_factors(spec, pair)
    with spec.workprec():
        d = factors[(1, 4)] * factors[(2, 6)] - factors[(2, 4)] * factors[(1, 6)]
        w12 = floquet_wronskian(pair.w1, pair.w2)
        value = mp.re(d / w12)
    return QuantizationPoint(spec, pair, factors, value, w12)


def quantization_value(lam, l, epsilon, config: SolverConfig | None = None) -> mpf:
    """Real function of the energy whose zeros are the bound states of ``(lam, l)``."""
    return quantization_point(make_problem(lam, l, epsilon, config)).value


class _Scanner:
    """Quantization function with continuation seeds and degenerate-point stepping."""

    def __init__(self, lam, l, config):
        self.lam, self.l, self.config = lam, l, config or SolverConfig()
        self.seed = None
        self.calls = 0

    def point(self, eps) -> QuantizationPoint:
        spec = make_problem(self.lam, self.l, eps, self.config)
        self.calls += 1
        p = quantization_point(spec, self.seed)
        self.seed = p.pair
        return p

    def __call__(self, eps):
        try:
            return self.point(eps).value
        except DegenerateIndexError:
            log.warning("degenerate indices at eps=%s; stepping over", mp.nstr(eps, 12))
            return self.point(eps + DEGENERATE_STEP).value


def _alpha_grid(eps_lo, eps_hi, points):
    # uniform in sqrt(-eps): level spacing is far more even there than in eps
    a_lo, a_hi = mp.sqrt(-mpf(eps_lo)), mp.sqrt(-mpf(eps_hi))
    return [-((a_lo + (a_hi - a_lo) * k / (points - 1)) ** 2) for k in range(points)]


def refine_root(f, a, b, fa=None, fb=None, prec=113, xtol=1e-13, polish=True):
    """Root of ``f`` in the bracket ``[a, b]``.

    Brent's method on a float view of ``f`` brackets the root to ``xtol``;
    with ``polish`` at most three secant steps at full precision then refine
    it until the step stalls at the noise level of ``f``.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0:
        return mpf(a)
    if fb == 0:
        return mpf(b)
    if mp.sign(fa) == mp.sign(fb):
        raise NoSignChangeError("bracket does not contain a sign change")
    cache = {float(a): fa, float(b): fb}

    def g(x):
        if x not in cache:
            cache[x] = f(mpf(repr(x)))
        return float(mp.sign(cache[x])) * max(abs(float(cache[x])), 1e-300)

    lo, hi = sorted((float(a), float(b)))
    x = brentq(g, lo, hi, xtol=xtol, rtol=4 * sys.float_info.epsilon)
    with mp.workprec(prec):
        x0 = mpf(repr(x))
        if not polish:
            return x0
        f0 = cache.get(x)
        f0 = f(x0) if f0 is None else f0
        x1 = x0 + mpf("1e-11") * max(1, abs(x0))
        f1 = f(x1)
        floor = mpf(2) ** (10 - prec) * max(1, abs(x0))
        last = None
        for _ in range(3):
            if f1 == f0:
                break
            step = -f1 * (x1 - x0) / (f1 - f0)
            if last is not None and abs(step) > abs(last):
                break
            x0, f0 = x1, f1
            x1 = x1 + step
            if not lo <= x1 <= hi:
                return x0
            if abs(step) <= floor:
                break
            f1 = f(x1)
            last = step
        return x1


def locate_energies(lam, l, eps_lo, eps_hi, grid_points: int = 50, config: SolverConfig | None = None):
    """Energies of the bound states in ``[eps_lo, eps_hi]``.

    The quantization function is tabulated on a grid uniform in
    ``sqrt(-eps)``; every sign change is refined to working precision.
    Grid points at degenerate indices are skipped.  Returns the roots in
    increasing order together with the last quantization point of each.
    """
    if not eps_lo < eps_hi < 0:
        raise ValueError("need eps_lo < eps_hi < 0")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    scan = _Scanner(lam, l, config)
    prec = scan.config.precision_bits
    samples = []
    for eps in _alpha_grid(eps_lo, eps_hi, grid_points):
        try:
            samples.append((eps, scan(eps)))
        except DegenerateIndexError:
            continue
    roots = []
    for (a, fa), (b, fb) in zip(samples, samples[1:]):
        if fa == 0:
            roots.append(a)
        elif mp.sign(fa) != mp.sign(fb) and fb != 0:
            roots.append(refine_root(scan, a, b, fa, fb, prec))
    if samples and samples[-1][1] == 0:
        roots.append(samples[-1][0])
    return roots


# --------------------------------------------------------------------------
# bound states
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Regions:
    """The inner series is used below ``inner``, the outer above ``outer``."""

    inner: mpf
    outer: mpf


@dataclass(frozen=True)
class BoundState:
    """A located bound state.

    ``norm`` is the constant making ``int_0^inf w(z)^2 dz = 1``; ``index``
    is the number of interior nodes.
    """

    spec: ProblemSpec
    pair: FloquetPair
    factors: ConnectionFactors
    a1: complex
    a2: complex
    norm: mpf = mpf(1)
    quantization_residual: mpf = mp.zero
    regions: Regions | None = None
    index: int | None = None
    w3: ThomeInfinity | None = field(default=None, repr=False)
    w5: ThomeOrigin | None = field(default=None, repr=False)

    @property
    def energy(self):
        return self.spec.eps

    @property
    def inner_coefficient(self):
        """``A1 T15 + A2 T25``: the physical solution is this multiple of w5 near 0."""
        t = self.factors
        with self.spec.workprec():
            return self.a1 * t[(1, 5)] + self.a2 * t[(2, 5)]

    def decay_residuals(self):
        """Relative size of the w4 and w6 components (both vanish at a bound state)."""
        t = self.factors
        out = []
        with self.spec.workprec():
            for j in (4, 6):
                x, y = self.a1 * t[(1, j)], self.a2 * t[(2, j)]
                out.append(abs(x + y) / (abs(x) + abs(y)))
        return tuple(out)


def rescale_to_c0(state: BoundState) -> dict:
    """First-row connection factors and ``A1`` for ``w1`` scaled to ``c_0 = 1``.

    The library normalizes Floquet solutions to unit coefficient norm with
    the largest coefficient real; tables in the literature commonly scale
    them so that ``c_0 = 1`` instead.  Dividing ``w1`` by ``c_0`` divides
    ``T_{1,j}`` by ``c_0`` and multiplies ``A1`` by it.
    """
    with state.spec.workprec():
        c0 = state.pair.w1.coeff(0)
        if not c0:
            raise ValueError("c_0 vanishes in this parity class")
        out = {f"T1{j}": state.factors[(1, j)] / c0 for j in (3, 4, 5, 6)}
        out["A1"] = state.a1 * c0
    return out


def mixing_coefficients(factors: ConnectionFactors):
    """``(A1, A2)`` normalized so that the physical solution tends to w3 at infinity."""
    t = factors
    den = t[(1, 3)] * t[(2, 4)] - t[(2, 3)] * t[(1, 4)]
    scale = abs(t[(1, 3)] * t[(2, 4)]) + abs(t[(2, 3)] * t[(1, 4)])
    if abs(den) <= mpf(2) ** (-mp.prec + 8) * scale:
        raise SingularSystemError("degenerate denominator in the mixing coefficients")
    return t[(2, 4)] / den, -t[(1, 4)] / den


def _relative_quantization(factors):
    t = factors
    x, y = t[(1, 4)] * t[(2, 6)], t[(2, 4)] * t[(1, 6)]
    return abs(x - y) / (abs(x) + abs(y))


def build_state(point: QuantizationPoint) -> BoundState:
    """Unnormalized bound state from the quantization data at a root."""
    spec = point.spec
    with spec.workprec():
        a1, a2 = mixing_coefficients(point.factors)
        res = _relative_quantization(point.factors)
    return BoundState(
        spec,
        point.pair,
        point.factors,
        a1,
        a2,
        quantization_residual=res,
        w3=thome_infinity(spec, 3),
        w5=thome_origin(spec, 5),
    )


def polish_energy(point: QuantizationPoint) -> QuantizationPoint:
    """One secant step on the quantization value at the point's own precision.

    A root located at lower precision leaves a dominant w6 admixture of
    relative size ``|eps error| * exp(2 sqrt(lam) z**-5 / 5)`` near the
    origin, which the higher-precision Laurent sum resolves.
    """
    spec = point.spec
    with spec.workprec():
        h = mpf(2) ** (-(spec.precision_bits // 2)) * max(1, abs(spec.eps))
        shifted = quantization_point(spec.with_energy(spec.eps + h), point.pair)
        if shifted.value == point.value:
            return point
        eps = spec.eps - point.value * h / (shifted.value - point.value)
        if not abs(eps - spec.eps) < 1e-6 * max(1, abs(spec.eps)):
            return point
        better = quantization_point(spec.with_energy(eps), point.pair)
    return better if abs(better.value) < abs(point.value) else point


def escalation_window(lam) -> int:
    """Laurent window used on escalation, scaled with ``sqrt(lam)`` above ``lam = 40``."""
    scaled = ESCALATED_WINDOW * math.sqrt(max(1.0, float(lam) / 40))
    return 20 * math.ceil(scaled / 20)


def escalate(state: BoundState, bits: int = ESCALATED_BITS, window: int | None = None) -> BoundState:
    """Recompute the Floquet pair and connection data at ``bits`` on a wider window."""
    c = state.spec.config
    window = max(c.M, c.N, window or escalation_window(state.spec.lam))
    config = c.with_(precision_bits=bits, M=window, N=window)
    spec = make_problem(state.spec.lam, state.spec.l, state.spec.eps, config)
    point = polish_energy(quantization_point(spec, state.pair))
    new = build_state(point)
    return replace(new, norm=state.norm, index=state.index)


# --------------------------------------------------------------------------
# representations of the wave function
# --------------------------------------------------------------------------


def inner_value(state: BoundState, z):
    """``(A1 T15 + A2 T25) w5(z)`` with its relative error estimate."""
    with state.spec.workprec():
        v, est = evaluate_thome_origin(state.w5, z)
        return mp.re(state.inner_coefficient) * v, est + _imag_part(state.inner_coefficient)


def outer_value(state: BoundState, z):
    """``w3(z)`` with its relative error estimate (unit coefficient by construction)."""
    return evaluate_thome_infinity(state.w3, z)


def middle_value(state: BoundState, z, truncation=None):
    """``A1 w1(z) + A2 w2(z)`` with an error estimate that accounts for cancellation."""
    with mp.workprec(state.pair.w1.prec):
        v1, e1 = floquet_terms(state.pair.w1, z, truncation)
        if state.pair.conjugate_pair:
            v2, e2 = mp.conj(v1), e1
        else:
            v2, e2 = floquet_terms(state.pair.w2, z, truncation)
        x, y = state.a1 * v1, state.a2 * v2
        v = x + y
        if not v:
            return mp.zero, mp.inf
        u = mpf(2) ** (-mp.prec)
        err = abs(x) * (e1 + 4 * u) + abs(y) * (e2 + 4 * u)
        return mp.re(v), err / abs(v) + _imag_part(v)


def _imag_part(v):
    return abs(mp.im(v)) / abs(v) if v else mp.zero


_REPRESENTATIONS = {"inner": inner_value, "middle": middle_value, "outer": outer_value}


def representation_values(state: BoundState, z):
    """``{tag: (value, estimate)}`` for every representation, unnormalized."""
    out = {}
    for tag, fn in _REPRESENTATIONS.items():
        try:
            out[tag] = fn(state, z)
        except (ZeroDivisionError, ValueError):
            out[tag] = (mp.nan, mp.inf)
    return out


def overlap_deviation(state: BoundState, zs, tags=("middle", "outer")):
    """Largest relative difference between two representations over ``zs``."""
    first, second = (_REPRESENTATIONS[t] for t in tags)
    worst = mp.zero
    for z in zs:
        a, _ = first(state, z)
        b, _ = second(state, z)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    return worst


def coverage_gaps(state: BoundState, zs, tol=None, tags=("middle", "outer")):
    """Points of ``zs`` where none of the ``tags`` representations is certified to ``tol``.

    A representation is certified at ``z`` when its own error estimate is at
    most ``tol`` (default ``wave_tol``); an empty result means the
    representations overlap across ``zs``.
    """
    tol = mpf(tol if tol is not None else state.spec.config.wave_tol)
    fns = [_REPRESENTATIONS[t] for t in tags]
    return [z for z in zs if not any(fn(state, z)[1] <= tol for fn in fns)]


def _scan_grid(state):
    alpha = mp.sqrt(-state.spec.eps)
    z_far = max(mpf(8), 40 / alpha)
    zs, z = [], mpf("0.15")
    while z < z_far:
        zs.append(z)
        z *= mpf("1.04")
    zs.append(z_far)
    return zs


def _valid_run(zs, ok, anchor):
    """Largest contiguous run of valid grid points containing the point nearest ``anchor``."""
    i = min(range(len(zs)), key=lambda k: abs(zs[k] - anchor))
    if not ok[i]:
        return None
    lo = hi = i
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    while hi < len(zs) - 1 and ok[hi + 1]:
        hi += 1
    return lo, hi


def find_regions(state: BoundState, tol=None):
    """Region boundaries from the error estimates of the three representations.

    Returns ``None`` when the Laurent region does not overlap both
    asymptotic regions at the state's precision.
    """
    tol = mpf(tol if tol is not None else state.spec.config.wave_tol)
    zs = _scan_grid(state)
    inner_ok = [inner_value(state, z)[1] <= tol for z in zs]
    middle_ok = [middle_value(state, z)[1] <= tol for z in zs]
    outer_ok = [outer_value(state, z)[1] <= tol for z in zs]
    run = _valid_run(zs, middle_ok, 1)
    if run is None:
        return None
    m_lo, m_hi = run
    # inner validity must reach the Laurent run, outer validity must start inside it
    if not all(inner_ok[: m_lo + 1]) or not all(outer_ok[m_hi:]):
        return None
    i_hi = m_lo
    while i_hi + 1 <= m_hi and inner_ok[i_hi + 1]:
        i_hi += 1
    o_lo = m_hi
    while o_lo - 1 >= m_lo and outer_ok[o_lo - 1]:
        o_lo -= 1
    inner = mp.sqrt(zs[m_lo] * zs[i_hi])
    outer = mp.sqrt(zs[o_lo] * zs[m_hi])
    if inner >= outer:
        return None
    return Regions(inner, outer)


def with_regions(state: BoundState, escalation: bool = True) -> BoundState:
    """Attach region boundaries, escalating the precision if the regions do not overlap."""
    regions = find_regions(state)
    if regions is None and escalation and state.spec.precision_bits < ESCALATED_BITS:
        window = escalation_window(state.spec.lam)
        for attempt in (window, 2 * window):
            log.info("raising precision to %d bits on window %d for the Laurent region", ESCALATED_BITS, attempt)
            state = escalate(state, window=attempt)
            regions = find_regions(state)
            if regions is not None:
                break
    if regions is None:
        raise PrecisionExhaustionError(
            f"no overlap of the wave-function representations at {state.spec.precision_bits} bits"
        )
    return replace(state, regions=regions)


def _raw_value(state: BoundState, z):
    r = state.regions
    if z < r.inner:
        return inner_value(state, z)[0], "inner"
    if z <= r.outer:
        return middle_value(state, z)[0], "middle"
    return outer_value(state, z)[0], "outer"


def wavefunction_tagged(state: BoundState, z):
    """Normalized ``w(z)`` and the tag of the representation used."""
    if state.regions is None:
        raise ValueError("state has no region boundaries; use assemble_state")
    if z <= 0:
        raise ValueError("z must be positive")
    with state.spec.workprec():
        v, tag = _raw_value(state, mpf(z))
        return state.norm * v, tag


def wavefunction(state: BoundState, z):
    """Normalized real wave function at ``z > 0`` (positive at large ``z``)."""
    return wavefunction_tagged(state, z)[0]


def normalize(state: BoundState, quad_bits: int = 80) -> BoundState:
    """Store ``norm`` such that ``int_0^inf w^2 dz = 1``."""
    if state.regions is None:
        state = with_regions(state)
    r = state.regions

    def f(z):
        with state.spec.workprec():
            v = _raw_value(state, z)[0]
        return v * v

    with mp.workprec(quad_bits):
        total, err = mp.fsum([0]), mp.zero
        for a, b in ((0, r.inner), (r.inner, r.outer), (r.outer, mp.inf)):
            val, e = mp.quad(f, [a, b], error=True, maxdegree=10)
            total += val
            err += e
        if not total > 0 or err > mpf(10) ** -12 * total:
            raise QuadratureError(f"normalization integral error {mp.nstr(err, 3)} too large")
        norm = 1 / mp.sqrt(total)
    return replace(state, norm=norm)


def count_nodes(state: BoundState, points: int = 400) -> int:
    """Sign changes of the wave function between the two asymptotic regions."""
    r = state.regions
    lo, hi = r.inner * mpf("0.9"), r.outer * mpf("1.1")
    ratio = (hi / lo) ** (mpf(1) / (points - 1))
    signs = []
    with state.spec.workprec():
        z = lo
        for _ in range(points):
            v = _raw_value(state, z)[0]
            if v:
                signs.append(v > 0)
            z *= ratio
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def assemble_state(point: QuantizationPoint, escalation: bool = True) -> BoundState:
    """Mixing coefficients, regions, normalization and node count at a root."""
    state = with_regions(build_state(point), escalation)
    state = normalize(state)
    return replace(state, index=count_nodes(state))


def find_bound_states(
    lam,
    l,
    eps_lo,
    eps_hi,
    grid_points: int = 50,
    config: SolverConfig | None = None,
    failures: list | None = None,
):
    """Located and fully assembled bound states of ``(lam, l)`` in ``[eps_lo, eps_hi]``.

    Roots whose assembly fails are skipped; ``(eps, error)`` pairs are
    appended to ``failures`` when given.
    """
    if grid_points < 50:
        raise ValueError("grid_points must be at least 50")
    roots = locate_energies(lam, l, eps_lo, eps_hi, grid_points, config)
    states = []
    seed = None
    for eps in roots:
        try:
            spec = make_problem(lam, l, eps, config)
            point = quantization_point(spec, seed)
            seed = point.pair
            states.append(assemble_state(point))
        except LJError as exc:
            log.warning("state at eps=%s failed: %s", mp.nstr(eps, 10), exc)
            if failures is not None:
                failures.append((eps, exc))
    return states


# --------------------------------------------------------------------------
# spectrum over a range of intensities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumRow:
    lam: float
    l: int
    index: int
    eps: mpf


@dataclass
class SpectrumDataset:
    """Rows ``(lam, l, index, eps)`` sorted by ``(lam, l, index)``; failed cells in ``failures``."""

    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def curve(self, l, index):
        return [(r.lam, r.eps) for r in self.rows if r.l == l and r.index == index]

    def count(self, lam, l=None):
        return sum(1 for r in self.rows if r.lam == lam and (l is None or r.l == l))


def _track(scan: _Scanner, guess, lo, hi, width, xtol=1e-10):
    """Bracket the root near ``guess`` inside ``(lo, hi)`` and refine it to ``xtol``."""
    a, b = max(lo, guess - width), min(hi, guess + width)
    fa, fb = scan(a), scan(b)
    for _ in range(12):
        if mp.sign(fa) != mp.sign(fb):
            return refine_root(scan, a, b, fa, fb, scan.config.precision_bits, xtol, polish=False)
        width *= 2
        if a > lo:
            a = max(lo, guess - width)
            fa = scan(a)
        if b < hi:
            b = min(hi, guess + width)
            fb = scan(b)
    raise NoSignChangeError(f"lost the root near eps={mp.nstr(guess, 8)}")


def _scan_interval(scan: _Scanner, eps_lo, eps_hi, points, xtol=1e-10):
    roots, prev = [], None
    for eps in _alpha_grid(eps_lo, eps_hi, points):
        f = scan(eps)
        if prev is not None and mp.sign(prev[1]) != mp.sign(f):
            roots.append(refine_root(scan, prev[0], eps, prev[1], f, scan.config.precision_bits, xtol, polish=False))
        prev = (eps, f)
    return roots


def spectrum_dataset(
    lambda_lo,
    lambda_hi,
    lambda_steps: int,
    l_set=(0, 1, 2, 3, 4),
    config: SolverConfig | None = None,
    eps_top=-1e-3,
    scan_points: int = 12,
    xtol: float = 1e-10,
) -> SpectrumDataset:
    """Bound-state energies on a uniform intensity grid, each to about ``xtol``.

    Known roots are followed from one intensity to the next, each with its
    own Floquet seed.  A new state enters through ``eps_top``: a sign flip
    of the quantization function at ``eps_top`` between two grid intensities
    triggers a scan of the interval between the shallowest known root and
    ``eps_top``.
    """
    if not 0 < lambda_lo < lambda_hi:
        raise ValueError("need 0 < lambda_lo < lambda_hi")
    if lambda_steps < 2:
        raise ValueError("lambda_steps must be at least 2")
    lams = [lambda_lo + (lambda_hi - lambda_lo) * k / (lambda_steps - 1) for k in range(lambda_steps)]
    config = config or SolverConfig()
    data = SpectrumDataset()
    eps_top = mpf(eps_top)
    for l in l_set:
        roots, history, top_sign, seeds = [], [], None, {}
        for lam in lams:
            scan = _Scanner(lam, l, config)
            eps_lo = -mpf(lam) * mpf("0.999")
            try:
                if top_sign is None:
                    roots = _scan_interval(scan, eps_lo, eps_top, max(50, scan_points), xtol)
                    seeds = {}
                else:
                    roots = _follow(scan, roots, history, seeds, eps_lo, eps_top, xtol)
                scan.seed = seeds.get("top")
                f_top = scan(eps_top)
                seeds["top"] = scan.seed
                if top_sign is not None and mp.sign(f_top) != top_sign:
                    upper = roots[-1] if roots else eps_lo
                    new = _scan_interval(scan, upper + mpf("1e-6"), eps_top, scan_points, xtol)
                    roots = sorted(roots + new)
                top_sign = mp.sign(f_top)
            except LJError as exc:
                log.warning("lambda=%s l=%d failed: %s", lam, l, exc)
                data.failures.append((lam, l, str(exc)))
                top_sign = None
                continue
            history.append((mpf(lam), list(roots)))
            for i, eps in enumerate(roots):
                data.rows.append(SpectrumRow(float(lam), l, i, eps))
    data.rows.sort(key=lambda r: (r.lam, r.l, r.index))
    return data


def _extrapolate(history, i, lam):
    """Quadratic (or linear) extrapolation of root ``i`` in lambda and an error scale."""
    pts = [(x, r[i]) for x, r in history[-3:] if i < len(r)]
    if len(pts) < 2:
        return (pts[-1][1] if pts else None), None
    (l1, r1), (l0, r0) = pts[-1], pts[-2]
    linear = r1 + (r1 - r0) * (lam - l1) / (l1 - l0)
    if len(pts) < 3:
        # curvature unknown: allow a quarter of the last move
        return linear, abs(r1 - r0) / 4
    (l2, r2) = pts[0]
    # Newton form through the three points
    d1 = (r1 - r0) / (l1 - l0)
    d0 = (r0 - r2) / (l0 - l2)
    quad = linear + (d1 - d0) / (l1 - l2) * (lam - l1) * (lam - l0)
    return quad, abs(quad - linear)


def _follow(scan, roots, history, seeds, eps_lo, eps_top, xtol):
    """Track each known root to the new intensity, starting from its extrapolation."""
    lam = mpf(scan.lam)
    new = []
    for i, eps in enumerate(roots):
        guess, err = _extrapolate(history, i, lam)
        if guess is None:
            guess = eps
        guess = min(max(guess, eps_lo), eps_top)
        lower = new[-1] + mpf("1e-9") if new else eps_lo
        # a root seen only once (just appeared near eps_top) may move by a sizeable fraction of itself
        width = max(mpf("1e-3"), 8 * abs(eps)) if err is None else max(mpf("1e-6"), 4 * err)
        scan.seed = seeds.get(i)
        new.append(_track(scan, guess, lower, eps_top, width, xtol))
        seeds[i] = scan.seed
    return new
