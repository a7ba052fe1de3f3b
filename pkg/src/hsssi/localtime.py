"""Occupation densities of stable paths and exact local-time moments.

The estimator is the box-kernel occupation density

    L_t(x) ~ (1 / 2h) * sum_{k dt < t} dt * 1{|xi_{k dt} - x| <= h},

which integrates to exactly ``t`` over ``x`` (up to one grid cell).  The
moment oracles use the stable transition density
``p_u(x) = u**(-1/beta) p_1(x u**(-1/beta))`` and the simplex integrals

    E L_t(x)**n = n! int_{0<u_1<...<u_n<t} p_{u_1}(x) prod p_{u_k - u_{k-1}}(0) du.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .quadrature import integrate_1d, integrate_fourier
from .sampling import PathGrid
from .testfunctions import TestFunctionPhi

CSV_SCHEMA = "hsssi.localtime/1"


@dataclass(frozen=True)
class LocalTimeField:
    xgrid: np.ndarray
    times: np.ndarray
    table: np.ndarray          # shape (len(times), len(xgrid))
    bandwidth: float

    @property
    def dx(self):
        return float(self.xgrid[1] - self.xgrid[0]) if self.xgrid.size > 1 else 0.0

    def mass(self):
        """``sum_k L_t(x_k) dx`` per time."""
        return self.table.sum(axis=1) * self.dx

    def at(self, t):
        k = int(np.flatnonzero(np.isclose(self.times, t))[0])
        return self.table[k]

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# schema: {CSV_SCHEMA}\n")
        buf.write("t,x,value\n")
        for t, row in zip(self.times, self.table):
            for x, v in zip(self.xgrid, row):
                buf.write(f"{float(t)!r},{float(x)!r},{float(v)!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _check_times(times, horizon):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(times > horizon * (1 + 1e-12)):
        raise ValueError(f"observation times must lie in [0, {horizon}]")
    if np.any(np.diff(times) < 0):
        raise ValueError("observation times must be sorted")
    return times


def _steps_before(t, dt):
    # number of grid points s = k dt with s < t
    return int(math.ceil(t / dt - 1e-9))


def occupation_counts(values, dt, xgrid, h, times):
    """Counts ``#{k : k dt < t, |xi_k - x| <= h}``, shape ``(len(times), len(xgrid))``."""
    xgrid = np.asarray(xgrid, dtype=float)
    out = np.zeros((len(times), xgrid.size))
    for i, t in enumerate(times):
        n = min(_steps_before(t, dt), values.size)
        if n == 0:
            continue
        srt = np.sort(values[:n])
        out[i] = (np.searchsorted(srt, xgrid + h, side="right")
                  - np.searchsorted(srt, xgrid - h, side="left"))
    return out


def estimate_local_time(path: PathGrid, xgrid, bandwidth=None, times=None) -> LocalTimeField:
    """Box-kernel occupation density of one path; ``bandwidth`` defaults to ``2 dx``."""
    xgrid = np.asarray(xgrid, dtype=float)
    dx = float(xgrid[1] - xgrid[0]) if xgrid.size > 1 else 0.0
    h = 2 * dx if bandwidth is None else float(bandwidth)
    if h < dx / 2:
        raise ValueError("bandwidth must be at least half the grid spacing")
    times = _check_times([path.horizon] if times is None else times, path.horizon)
    counts = occupation_counts(path.values, path.dt, xgrid, h, times)
    return LocalTimeField(xgrid, times, counts * path.dt / (2 * h), h)


def occupation_integral(path: PathGrid, phi, tau):
    """``sum_{k dt < tau} dt phi(xi_{k dt})``."""
    if tau > path.horizon * (1 + 1e-12):
        raise ValueError("tau beyond the path horizon")
    n = min(_steps_before(tau, path.dt), path.values.size)
    return float(path.dt * np.sum(phi(path.values[:n])))


def field_integral(field: LocalTimeField, phi: TestFunctionPhi):
    """``int phi(y) L_t(y) dy`` on the field grid, per time."""
    return field.table @ phi(field.xgrid) * field.dx


# ---------------------------------------------------------------------------
# stable density

def p1_zero(beta):
    """``p_1(0) = Gamma(1 + 1/beta) / pi``."""
    return math.gamma(1 + 1 / beta) / math.pi


def _p1_asymptotic(beta, y, terms=8):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for k in range(1, terms + 1):
        out += ((-1) ** (k + 1) * math.gamma(beta * k + 1) / math.factorial(k)
                * math.sin(math.pi * beta * k / 2) * y ** (-beta * k - 1))
    return out / math.pi


_Y_SWITCH = 30.0


def _p1_fourier(beta, y):
    """``(1/pi) int_0^inf cos(y z) exp(-z**beta) dz``."""
    if y < 1.0:
        # QAWF is unreliable at low frequency; the integrand decays fast anyway
        val = integrate_1d(lambda z: math.cos(y * z) * math.exp(-z ** beta), 0.0, np.inf,
                           epsabs=1e-13)[0]
    else:
        val = integrate_fourier(lambda z: math.exp(-z ** beta), 0.0, y, "cos", epsabs=1e-13)[0]
    return val / math.pi


@lru_cache(maxsize=16)
def _p1_table(beta):
    ys = np.linspace(0.0, _Y_SWITCH, 1501)
    vals = np.array([_p1_fourier(beta, y) for y in ys])
    return CubicSpline(ys, vals, bc_type=((1, 0.0), "not-a-knot"))


def stable_density(beta, y, u=1.0):
    """Transition density ``p_u(y)`` of the standard symmetric beta-stable motion."""
    y = np.abs(np.asarray(y, dtype=float))
    s = u ** (-1.0 / beta)
    ys = y * s
    spline = _p1_table(beta)
    inner = spline(np.minimum(ys, _Y_SWITCH))
    outer = _p1_asymptotic(beta, np.maximum(ys, _Y_SWITCH))
    return s * np.where(ys < _Y_SWITCH, inner, outer)


# ---------------------------------------------------------------------------
# moment oracles

def _simplex_zero_moment(beta, r, k):
    """``int_{v_1+...+v_k <= r} prod p_{v_i}(0) dv`` (Dirichlet integral)."""
    if k == 0:
        return 1.0
    a = 1 - 1 / beta
    return (p1_zero(beta) * math.gamma(a)) ** k * r ** (k * a) / math.gamma(k * a + 1)


def local_time_moment_exact(beta, t, x=0.0, n=1):
    """``E L_t(x)**n`` for the symmetric beta-stable motion, ``n <= 4``."""
    if not 1 <= int(n) <= 4 or int(n) != n:
        raise ValueError("moment order must be an integer in 1..4")
    n = int(n)
    if t <= 0:
        return 0.0
    if x == 0:
        return math.factorial(n) * _simplex_zero_moment(beta, t, n)
    # integrate out u_2..u_n in closed form, leaving a 1-d integral in u_1
    a = 1 - 1 / beta
    tail_exp = (n - 1) * a

    def g(v):  # v = t - u_1
        return float(stable_density(beta, x, t - v)) * _simplex_zero_moment(beta, v, n - 1)

    val = integrate_1d(g, 0.0, t, epsabs=1e-12, epsrel=1e-9, limit=200,
                       strict=False)[0] if tail_exp > 0 else \
        integrate_1d(lambda u: float(stable_density(beta, x, u)), 0.0, t,
                     epsabs=1e-12, epsrel=1e-9, strict=False)[0]
    return math.factorial(n) * val


def local_time_moment_quadrature(beta, t, x=0.0, n=1):
    """Direct ``n``-fold quadrature of the simplex formula (``n <= 2``), an independent check."""
    if n == 1:
        return integrate.quad(lambda u: float(stable_density(beta, x, u)), 0, t,
                              limit=200)[0]
    if n == 2:
        val = integrate.dblquad(
            lambda u2, u1: float(stable_density(beta, 0.0, u2 - u1)) * float(stable_density(beta, x, u1)),
            0, t, lambda u1: u1, lambda u1: t, epsabs=1e-10, epsrel=1e-8)[0]
        return 2 * val
    raise ValueError("direct quadrature implemented for n <= 2")


def local_time_mixed_moment(beta, t, x1, x2):
    """``E L_t(x1) L_t(x2)`` by nested quadrature over the two orderings."""

    def first(r, y):
        if r <= 0:
            return 0.0
        return integrate_1d(lambda u: float(stable_density(beta, y, u)), 0.0, r,
                            epsabs=1e-12, epsrel=1e-9, strict=False)[0]

    def ordered(xa, xb):
        return integrate_1d(lambda u: float(stable_density(beta, xa, u)) * first(t - u, xb - xa),
                            0.0, t, epsabs=1e-10, epsrel=1e-7, strict=False)[0]

    return ordered(x1, x2) + ordered(x2, x1)


def mean_local_time(beta, t, x):
    """``E L_t(x) = int_0^t p_u(x) du`` (vectorized over ``x``)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.array([local_time_moment_exact(beta, t, xi, 1) for xi in xs.ravel()])
    return vals.reshape(xs.shape) if np.ndim(x) else float(vals[0])
