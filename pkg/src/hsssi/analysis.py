"""Empirical characteristic functions, CF distances, ladders and moment trends."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .sampling import RngSpec

REPORT_SCHEMA = "hsssi.report/1"


def theta_grid(n=16, lo=0.1, hi=4.0):
    """Geometric grid, the default comparison grid."""
    return np.geomspace(lo, hi, n)


def theta_grid_for_exponent(k, alpha, n=16, lo=0.05, hi=3.0):
    """Geometric grid on which ``-log Phi = k |theta|**alpha`` spans ``[lo, hi]``."""
    return np.geomspace((lo / k) ** (1 / alpha), (hi / k) ** (1 / alpha), n)


def _as_matrix(samples, times=None):
    """``(N, m)`` array of values at ``times`` from samples or an array."""
    if isinstance(samples, np.ndarray):
        return np.atleast_2d(samples.astype(float))
    rows = []
    for s in samples:
        if times is None:
            rows.append(s.values)
        else:
            idx = [int(np.flatnonzero(np.isclose(s.times, t))[0]) for t in times]
            rows.append(s.values[idx])
    return np.array(rows, dtype=float)


@dataclass
class EcfReport:
    theta: np.ndarray
    re: np.ndarray
    im: np.ndarray
    se: np.ndarray
    n: int

    @property
    def values(self):
        return self.re + 1j * self.im


def ecf(samples, query) -> EcfReport:
    """``(1/N) sum exp(i theta sum_j a_j value_j)`` with per-theta standard errors."""
    X = _as_matrix(samples, getattr(query, "times", None))
    if X.shape[0] < 2:
        raise ValueError("need at least two samples")
    y = X @ np.asarray(query.coeffs, dtype=float)
    th = np.atleast_1d(np.asarray(query.theta, dtype=float))
    arg = np.outer(th, y)
    c, s = np.cos(arg), np.sin(arg)
    n = y.size
    re, im = c.mean(axis=1), s.mean(axis=1)
    se = np.sqrt(np.maximum(c.var(axis=1) + s.var(axis=1), 0.0) / n)
    return EcfReport(th, re, im, se, n)


@dataclass
class CompareResult:
    sup_distance: float
    passed: bool
    fitted_scale: float | None
    distance: np.ndarray
    tolerance: np.ndarray
    failures: np.ndarray

    @property
    def pass_flags(self):
        return self.distance <= self.tolerance


def cf_compare(report: EcfReport, target, k_sigma=3.0, fit_scale=False, quad_tol=0.0,
               target_se=None, extra_se=None, scale_bounds=(1e-3, 1e3)) -> CompareResult:
    """Sup distance between an ECF and a target CF.

    ``target`` is an array on ``report.theta`` or a callable ``theta -> CF``;
    fitting a scale ``lambda`` (replacing ``a`` by ``lambda a``, i.e.
    ``theta`` by ``lambda theta``) requires a callable.  A point passes if
    its distance is at most ``k_sigma`` combined standard errors plus
    ``quad_tol``.
    """
    th = report.theta
    se_t = np.zeros_like(th) if target_se is None else np.broadcast_to(target_se, th.shape)
    se_x = np.zeros_like(th) if extra_se is None else np.broadcast_to(extra_se, th.shape)
    if callable(target):
        fn = target
    else:
        tv = np.asarray(target, dtype=complex)
        if tv.shape != th.shape:
            raise ValueError("target grid does not match the ECF grid")
        if fit_scale:
            raise ValueError("fitting a scale needs a callable target")
        fn = None
    lam = None
    if fit_scale:
        se = np.sqrt(report.se ** 2 + se_t ** 2 + se_x ** 2)
        se = np.where(se > 0, se, 1.0)

        def loss(loglam):
            return float(np.sum(np.abs(report.values - fn(math.exp(loglam) * th)) ** 2 / se ** 2))

        res = optimize.minimize_scalar(loss, bounds=tuple(np.log(scale_bounds)), method="bounded",
                                       options={"xatol": 1e-8})
        lam = math.exp(res.x)
        tv = np.asarray(fn(lam * th), dtype=complex)
    elif fn is not None:
        tv = np.asarray(fn(th), dtype=complex)
    dist = np.abs(report.values - tv)
    tol = k_sigma * np.sqrt(report.se ** 2 + se_t ** 2 + se_x ** 2) + quad_tol
    ok = dist <= tol
    return CompareResult(float(dist.max()), bool(ok.all()), lam, dist, tol, np.flatnonzero(~ok))


def selfsim_check(cf, times, H, c, theta=None, coeffs=None):
    """``max_theta |Phi_{c t}(theta) - Phi_t(c**H theta)|``.

    ``cf(theta, times)`` returns the CF of ``sum_j a_j X_{t_j}`` on the grid.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    theta = theta_grid() if theta is None else np.asarray(theta, dtype=float)
    times = np.asarray(times, dtype=float)
    if c == 1:
        return 0.0
    a = np.asarray(cf(theta, c * times))
    b = np.asarray(cf(c ** H * theta, times))
    return float(np.max(np.abs(a - b)))


@dataclass
class LadderEntry:
    T: float
    distance: float
    tolerance: float
    passed: bool
    value: float | None = None
    se: float | None = None


@dataclass
class ConvergenceLadder:
    entries: list = field(default_factory=list)

    def add(self, entry: LadderEntry):
        self.entries.append(entry)
        self.entries.sort(key=lambda e: e.T)

    @property
    def distances(self):
        return np.array([e.distance for e in self.entries])

    def strictly_decreasing(self):
        d = self.distances
        return bool(np.all(np.diff(d) < 0))

    def non_increasing(self):
        d = self.distances
        return bool(np.all(np.diff(d) <= 0))

    @property
    def final_pass(self):
        return bool(self.entries and self.entries[-1].passed)

    def to_rows(self):
        return [(e.T, e.distance, e.tolerance, e.passed) for e in self.entries]


def _moment(x, order):
    return np.mean(x ** order)


def moment_trend(samples_by_T, target, order=2, tolerance=0.1, seed=0, n_boot=500,
                 k_sigma=3.0) -> ConvergenceLadder:
    """Empirical moments along a ``T`` ladder with bootstrap standard errors.

    For ``target != 0`` an entry passes when the relative error is at most
    ``tolerance``; for ``target == 0`` when the moment is within
    ``k_sigma`` bootstrap SEs of zero.
    """
    if not samples_by_T:
        raise ValueError("empty ladder")
    ladder = ConvergenceLadder()
    for i, (T, x) in enumerate(sorted(samples_by_T.items())):
        x = np.asarray(x, dtype=float).ravel()
        m = _moment(x, order)
        gen = RngSpec(seed, 7, (i,)).generator()
        idx = gen.integers(0, x.size, (n_boot, x.size))
        boots = np.mean(x[idx] ** order, axis=1)
        se = float(boots.std(ddof=1)) if x.size > 1 else 0.0
        if target == 0:
            dist = abs(m)
            tol = k_sigma * se
        else:
            dist = abs(m - target) / abs(target)
            tol = tolerance
        ladder.add(LadderEntry(float(T), float(dist), float(tol), bool(dist <= tol), float(m), se))
    return ladder


def report_csv(rows, path=None):
    """Rows ``(T, theta, ecf_re, ecf_im, se, target_re, target_im, pass)``."""
    buf = io.StringIO()
    buf.write(f"# schema: {REPORT_SCHEMA}\n")
    buf.write("T,theta,ecf_re,ecf_im,se,target_re,target_im,pass\n")
    for T, th, er, ei, se, tr, ti, ok in rows:
        buf.write(",".join(repr(float(v)) for v in (T, th, er, ei, se, tr, ti)) + f",{int(bool(ok))}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def compare_rows(T, report: EcfReport, target_values, result: CompareResult):
    tv = np.asarray(target_values, dtype=complex)
    return [(float(T), float(th), float(er), float(ei), float(se), float(t.real), float(t.imag), bool(ok))
            for th, er, ei, se, t, ok in zip(report.theta, report.re, report.im, report.se, tv,
                                             result.pass_flags)]
