"""Independent Numerov shooting solver used to cross-check the series method.

With ``t = ln z`` and ``w = exp(t/2) u`` the radial equation becomes

    u'' = (lam e^{-10t} - 2 lam e^{-4t} + l(l+1) + 1/4 - eps e^{2t}) u,

which a uniform ``t`` grid resolves at both the steep inner wall and the
slow outer tail.  The outward solution is seeded with the decaying origin
series, the inward one with the decaying series at infinity; they are
matched through a normalized discrete Wronskian at ``match_z``.  Numerov's
scheme is fourth order, so energies from ``h`` and ``h/2`` are combined by
Richardson extrapolation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from mpmath import mp
from scipy.integrate import simpson
from scipy.optimize import brentq

from .errors import ConfigurationError, NoSignChangeError
from .numerics import make_problem
from .thome import evaluate_thome_infinity, evaluate_thome_origin, thome_infinity, thome_origin

#: renormalize the running solution when it exceeds this magnitude
RESCALE = 1e150
#: energy change between h and h/2 above which a resolution warning is issued
RESOLUTION_TOL = 1e-6
#: largest admissible h^2 q / 12; Numerov's factor 1 - h^2 q / 12 must stay well away from 0
STIFFNESS_LIMIT = 0.5


class GridResolutionWarning(UserWarning):
    """Halving the step moved the oracle energy by more than ``RESOLUTION_TOL``."""


@dataclass(frozen=True)
class OracleConfig:
    """Domain and grid of the shooting solver.

    ``None`` for ``z_min``/``z_max`` selects them from ``lam`` and the energy:
    ``z_min`` where the origin solution is ``exp(-70)`` below unit size,
    ``z_max`` where ``exp(-sqrt(-eps) z)`` drops to ``exp(-45)``.
    """

    z_min: float | None = None
    z_max: float | None = None
    points: int = 3001
    match_z: float = 1.2

    def __post_init__(self):
        if self.points < 101:
            raise ValueError("points must be at least 101")
        if self.z_min is not None and self.z_max is not None and not 0 < self.z_min < self.z_max:
            raise ValueError("need 0 < z_min < z_max")

    def domain(self, lam, eps):
        z_min = self.z_min or (math.sqrt(lam) / (5 * 70)) ** 0.2
        z_max = self.z_max or max(10.0, 45.0 / math.sqrt(-eps))
        if not z_min < self.match_z < z_max:
            raise ValueError("match_z must lie inside (z_min, z_max)")
        return z_min, z_max


@dataclass(frozen=True)
class OracleEnergy:
    """Energies from step ``h`` and ``h/2`` and their Richardson extrapolation."""

    eps: float
    eps_h: float
    eps_half: float
    error: float


@dataclass(frozen=True)
class WavefunctionReport:
    """Comparison of a series-method state with the oracle on a common grid.

    ``max_deviation`` is the largest ``|w - w_oracle|`` over the window,
    relative to the largest ``|w|``.
    """

    max_deviation: float
    z_at_max: float
    norm_state: float
    norm_oracle: float
    z: np.ndarray
    deviation: np.ndarray


class _Grid:
    def __init__(self, lam, l, eps, config: OracleConfig, points):
        self.lam, self.l, self.eps = lam, l, eps
        z_min, z_max = config.domain(lam, eps)
        self.t = np.linspace(math.log(z_min), math.log(z_max), points)
        self.h = self.t[1] - self.t[0]
        self.m = int(np.searchsorted(self.t, math.log(config.match_z)))
        t = self.t
        self.q = lam * np.exp(-10 * t) - 2 * lam * np.exp(-4 * t) + l * (l + 1) + 0.25 - eps * np.exp(2 * t)
        stiffness = float(np.max(self.h ** 2 * self.q / 12))
        if stiffness > STIFFNESS_LIMIT:
            raise ConfigurationError(
                f"grid too coarse for the inner wall (h^2 q / 12 = {stiffness:.2f}); increase points"
            )

    def _seed_ratios(self):
        """``u(t_1)/u(t_0)`` at the inner end and ``u(t_{K-2})/u(t_{K-1})`` at the outer end."""
        spec = make_problem(self.lam, self.l, self.eps)
        w5, w3 = thome_origin(spec, 5), thome_infinity(spec, 3)
        t = self.t
        with mp.workprec(113):
            a, _ = evaluate_thome_origin(w5, mp.exp(t[0]))
            b, _ = evaluate_thome_origin(w5, mp.exp(t[1]))
            c, _ = evaluate_thome_infinity(w3, mp.exp(t[-1]))
            d, _ = evaluate_thome_infinity(w3, mp.exp(t[-2]))
            inner = float(b / a * mp.exp(-self.h / 2))
            outer = float(d / c * mp.exp(self.h / 2))
        return inner, outer

    def _numerov(self, indices, first_ratio):
        """Run Numerov along ``indices``; returns values and cumulative log scales.

        Uses the summed form ``y = (1 - h^2 q / 12) u``, ``D_{k+1} = D_k + h^2 q_k u_k``,
        ``y_{k+1} = y_k + D_{k+1}``, which keeps roundoff growth linear in the
        number of steps instead of quadratic.
        """
        h2 = self.h ** 2
        f = 1 - h2 * self.q / 12
        g = h2 * self.q
        u = np.zeros(len(self.t))
        logscale = np.zeros(len(self.t))
        i0, i1 = indices[0], indices[1]
        u[i0], u[i1] = 1.0, first_ratio
        y = f[i1] * first_ratio
        diff = y - f[i0]
        cur = first_ratio
        scale = 0.0
        for k in range(2, len(indices)):
            j, n = indices[k - 1], indices[k]
            diff += g[j] * cur
            y += diff
            cur = y / f[n]
            if abs(cur) > RESCALE:
                y /= RESCALE
                diff /= RESCALE
                cur /= RESCALE
                scale += math.log(RESCALE)
            u[n] = cur
            logscale[n] = scale
        return u, logscale

    def solve(self):
        inner, outer = self._seed_ratios()
        K = len(self.t)
        m = self.m
        u_out, s_out = self._numerov(list(range(0, m + 2)), inner)
        u_in, s_in = self._numerov(list(range(K - 1, m - 1, -1)), outer)
        return u_out, s_out, u_in, s_in

    def mismatch(self):
        u_out, s_out, u_in, s_in = self.solve()
        m = self.m
        # values at m and m+1 share the same scale up to one rescale step; bring them together
        a0, a1 = u_out[m], u_out[m + 1] * math.exp(s_out[m + 1] - s_out[m])
        b0, b1 = u_in[m], u_in[m + 1] * math.exp(s_in[m + 1] - s_in[m])
        return (a1 * b0 - a0 * b1) / (math.hypot(a0, a1) * math.hypot(b0, b1))

    def wavefunction(self):
        """Normalized ``w(z)`` on the grid, positive at large ``z``."""
        u_out, s_out, u_in, s_in = self.solve()
        m = self.m
        log_out = np.log(np.abs(u_out[: m + 1])) + s_out[: m + 1]
        log_in = np.log(np.abs(u_in[m:])) + s_in[m:]
        sign_out = np.sign(u_out[: m + 1])
        sign_in = np.sign(u_in[m:])
        # match the outward branch to the inward one at index m
        shift = log_in[0] - log_out[-1]
        flip = sign_in[0] * sign_out[-1]
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            left = flip * sign_out[:-1] * np.exp(log_out[:-1] + shift)
            right = sign_in * np.exp(log_in)
        u = np.concatenate([left, right])
        # remove the common scale before squaring
        peak = np.max(np.abs(u[np.isfinite(u)]))
        u = np.where(np.isfinite(u), u / peak, 0.0)
        z = np.exp(self.t)
        w = np.sqrt(z) * u
        norm = math.sqrt(simpson(w * w * z, x=self.t))
        w = w / norm
        if w[-1] < 0:
            w = -w
        return z, w


def _root(lam, l, bracket, config, points):
    lo, hi = bracket

    def f(eps):
        return _Grid(lam, l, eps, config, points).mismatch()

    f_lo, f_hi = f(lo), f(hi)
    if (f_lo > 0) == (f_hi > 0):
        raise NoSignChangeError(f"matching determinant has the same sign at both ends of {bracket}")
    return brentq(f, lo, hi, xtol=1e-13, rtol=1e-15)


def oracle_energy_details(lam, l: int, bracket, config: OracleConfig | None = None) -> OracleEnergy:
    """Oracle energy from grids ``h`` and ``h/2`` with Richardson extrapolation."""
    config = config or OracleConfig()
    lo, hi = sorted(float(x) for x in bracket)
    if not hi < 0:
        raise ValueError("the bracket must contain negative energies only")
    coarse = _root(lam, l, (lo, hi), config, config.points)
    fine = _root(lam, l, (lo, hi), config, 2 * config.points - 1)
    if abs(fine - coarse) > RESOLUTION_TOL:
        warnings.warn(
            f"halving the step moved the energy by {abs(fine - coarse):.2e}; increase points",
            GridResolutionWarning,
            stacklevel=2,
        )
    eps = (16 * fine - coarse) / 15
    return OracleEnergy(eps, coarse, fine, abs(fine - coarse) / 15)


def oracle_energy(lam, l: int, bracket, config: OracleConfig | None = None) -> float:
    """Bound-state energy in ``bracket`` from Numerov shooting (Richardson extrapolated).

    Raises :class:`NoSignChangeError` when the matching determinant does not
    change sign across ``bracket``.
    """
    return oracle_energy_details(lam, l, bracket, config).eps


def oracle_wavefunction(lam, l: int, eps, config: OracleConfig | None = None):
    """Normalized oracle wave function ``(z, w)`` at energy ``eps``."""
    config = config or OracleConfig()
    return _Grid(float(lam), l, float(eps), config, config.points).wavefunction()


def oracle_wavefunction_compare(state, config: OracleConfig | None = None, window=(0.5, 6.0),
                                samples: int = 300) -> WavefunctionReport:
    """Compare a normalized bound state with the oracle solution at the same energy.

    Both functions carry unit norm and positive sign at large ``z``; the
    deviation is sampled at about ``samples`` oracle grid points inside
    ``window`` (clipped to the oracle domain).
    """
    from .spectrum import wavefunction

    config = config or OracleConfig()
    lam, l, eps = float(state.spec.lam), state.spec.l, float(state.energy)
    z, w = oracle_wavefunction(lam, l, eps, config)
    inside = np.nonzero((z >= window[0]) & (z <= window[1]))[0]
    if len(inside) == 0:
        raise ValueError("comparison window does not meet the oracle domain")
    stride = max(1, len(inside) // samples)
    idx = inside[::stride]
    exact = np.array([float(wavefunction(state, zz)) for zz in z[idx]])
    dev = np.abs(exact - w[idx]) / np.max(np.abs(exact))
    k = int(np.argmax(dev))
    # norms over the common domain from the same t grid, coarsened for the series side
    coarse = np.arange(0, len(z), max(1, (len(z) - 1) // 800))
    values = np.array([float(wavefunction(state, zz)) for zz in z[coarse]])
    t = np.log(z)
    norm_state = float(simpson(values ** 2 * z[coarse], x=t[coarse]))
    norm_oracle = float(simpson(w ** 2 * z, x=t))
    return WavefunctionReport(float(dev[k]), float(z[idx][k]), norm_state, norm_oracle, z[idx], dev)
