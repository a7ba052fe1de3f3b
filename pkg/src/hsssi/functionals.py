"""Occupation functionals: single-path limits and the particle functional G_t^T.

Scaled coordinates
------------------
For a pure beta-stable motion and ``L == 1`` the particle functional is
computed in scaled coordinates.  With ``s = T**(1/beta)`` substitute
``x = s x'``, ``z = T**(1/(alpha beta)) z'`` and ``eta_{T u} = s xi_u``.
The intensity becomes ``dx' (x) |z'|**(-1-alpha) dz'`` on
``|z'| > delta_T = eps T**(-1/(alpha beta))`` and

    G_t^T = sum_j z'_j F(x'_j, t),
    F(x', t) = factor * int_0^t phi(s (x' + xi_u)) du,

with ``factor = T**(1 + 1/(alpha beta)) / scale_T``.  The window
``|x| <= K D_T**(1/beta)`` becomes ``|x'| <= K``.

Two particle engines are provided.  :func:`particle_functional_sample`
simulates one independent path per particle (faithful, affordable for small
``T``).  :class:`PrelimitPool` precomputes ``F`` for a pool of paths on a
grid of ``x'`` and draws particles by picking a pool path and a grid point;
conditional on the pool the functional is exactly compound Poisson, so its
characteristic function is also available in closed form
(:meth:`PrelimitPool.cf`).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .model import LevyModel, LimitSpec, SlowlyVarying, normalization, stable_constant
from .localtime import mean_local_time
from .parallel import map_blocks
from .quadrature import integrate_1d
from .sampling import RngSpec, sample_increments, sample_particle_field, stable_rvs
from .testfunctions import HeavyTailPair, IntervalCombination, TestFunctionPhi


@dataclass
class FunctionalSample:
    times: np.ndarray
    values: np.ndarray
    regime: str
    T: float
    replica: int = 0
    seed: int | None = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.times.shape:
            raise ValueError("values and times must have equal length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("functional values must be finite")

    def to_record(self):
        rec = {"regime": self.regime, "T": self.T, "seed": self.seed, "replica": self.replica,
               "times": self.times.tolist(), "values": self.values.tolist()}
        if self.warnings:
            rec["warnings"] = list(self.warnings)
        return rec


def samples_from_array(values, times, regime, T, seed=None):
    return [FunctionalSample(times, v, regime, T, r, seed) for r, v in enumerate(values)]


def write_jsonl(samples, path):
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_record(), sort_keys=True) + "\n")


def read_jsonl(path):
    out = []
    with open(path) as fh:
        for line in fh:
            r = json.loads(line)
            out.append(FunctionalSample(r["times"], r["values"], r["regime"], r["T"],
                                        r.get("replica", 0), r.get("seed")))
    return out


def _prefix_counts(times, dt):
    # number of grid points k dt < t
    return np.array([int(math.ceil(t / dt - 1e-9)) for t in times])


def _prefix_sums(vals, counts):
    cs = np.concatenate([[0.0], np.cumsum(vals)])
    return cs[np.minimum(counts, vals.size)]


# ---------------------------------------------------------------------------
# single-path functionals

def prop1_ladder(model: LevyModel, phi, Ts, x, times, n_replicas, rng: RngSpec, dt=1e-5,
                 workers=None):
    """``P_t^T(x)`` for every ``T`` in ``Ts``; returns ``{T: (n_replicas, len(times))}``.

    ``dt`` is the step on the rescaled clock ``u = s / D_T``.  For pure-stable
    motions the same rescaled path serves every ``T`` (common random numbers).
    Replica ``r`` uses ``rng.child(r)``.
    """
    return map_blocks(lambda a, n: _prop1_block(model, phi, Ts, x, times, a, n, rng, dt),
                      n_replicas, workers)


def _prop1_block(model, phi, Ts, x, times, start, n_replicas, rng, dt):
    times = np.asarray(times, dtype=float)
    counts = _prefix_counts(times, dt)
    n = int(counts.max())
    Ts = [float(T) for T in Ts]
    out = {T: np.empty((n_replicas, times.size)) for T in Ts}
    f = model.slowly_varying
    b = model.beta
    for r in range(n_replicas):
        gen = rng.child(start + r).generator()
        if model.f is None:
            std = np.concatenate([[0.0], np.cumsum(stable_rvs(b, n - 1, gen, dt ** (1 / b)))])
        for T in Ts:
            s = T ** (1 / b)
            fs = float(f(s))
            D_T, F_T = T / fs, T ** (1 - 1 / b) / fs
            step = D_T * dt
            if model.f is None:
                eta = s * std
            else:
                eta = np.concatenate([[0.0], np.cumsum(sample_increments(model, step, n - 1, gen))])
            out[T][r] = step / F_T * _prefix_sums(phi(eta - s * x), counts)
    return out


def prop1_sample(model, phi, T, x, times, rng: RngSpec, dt=1e-5) -> FunctionalSample:
    vals = prop1_ladder(model, phi, [T], x, times, 1, rng, dt)[float(T)][0]
    return FunctionalSample(times, vals, "prop1", float(T), rng.stream_id, rng.seed)


def rosen_ladder(beta, phi, Ts, times, n_replicas, rng: RngSpec, step=0.1, workers=None):
    """``T**(-(beta-1)/(2 beta)) int_0^{T t} phi(xi_s) ds`` for each ``T``.

    The motion is simulated on the original clock with step ``step``; the
    path for the largest ``T`` contains those of all smaller ``T``.
    """
    return map_blocks(lambda a, n: _rosen_block(beta, phi, Ts, times, a, n, rng, step),
                      n_replicas, workers)


def _rosen_block(beta, phi, Ts, times, start, n_replicas, rng, step):
    times = np.asarray(times, dtype=float)
    Ts = sorted(float(T) for T in Ts)
    n = int(math.ceil(Ts[-1] * times.max() / step - 1e-9))
    out = {T: np.empty((n_replicas, times.size)) for T in Ts}
    for r in range(n_replicas):
        gen = rng.child(start + r).generator()
        xi = np.concatenate([[0.0], np.cumsum(stable_rvs(beta, n - 1, gen, step ** (1 / beta)))])
        cs = np.concatenate([[0.0], np.cumsum(phi(xi))])
        for T in Ts:
            k = np.minimum(_prefix_counts(T * times, step), n)
            out[T][r] = step * cs[k] * T ** (-(beta - 1) / (2 * beta))
    return out


def rosen_sample(beta, phi, T, times, rng: RngSpec, step=0.1) -> FunctionalSample:
    vals = rosen_ladder(beta, phi, [T], times, 1, rng, step)[float(T)][0]
    return FunctionalSample(times, vals, "rosen", float(T), rng.stream_id, rng.seed)


# ---------------------------------------------------------------------------
# windows

@dataclass(frozen=True)
class WindowPolicy:
    """Spatial window ``|x| <= K D_T**(1/beta)`` (``|x'| <= K`` in scaled units)."""

    K: float = 10.0
    tolerance: float = 1e-3

    def x_max(self, D_T, beta):
        return self.K * D_T ** (1 / beta)

    def truncation_error(self, beta, t_max, anchor=5.0):
        """Expected local time outside the window, from ``C' |x|**(-beta-1)``.

        ``C'`` is fitted to ``E L_t(anchor)`` and integrated beyond ``K``.
        """
        c_prime = mean_local_time(beta, t_max, anchor) * anchor ** (beta + 1)
        return 2 * c_prime * self.K ** (-beta) / beta


# ---------------------------------------------------------------------------
# faithful particle engine

def particle_functional_sample(spec: LimitSpec, phi: TestFunctionPhi, T, times,
                               window_policy: WindowPolicy | None = None, rng: RngSpec = None,
                               model: LevyModel | None = None, L: SlowlyVarying | None = None,
                               dt=1e-3) -> FunctionalSample:
    """One replica of ``G_t^T`` with an independent path per particle.

    Paths are simulated on the original clock with step ``D_T dt``; particle
    ``j`` uses stream ``rng.child(j)``.
    """
    window_policy = window_policy or WindowPolicy()
    rng = rng if rng is not None else RngSpec(0)
    model = model or LevyModel.pure_stable(spec.params.beta)
    times = np.asarray(times, dtype=float)
    b = model.beta
    f = model.slowly_varying
    g1 = SlowlyVarying.constant(phi.amp1) if isinstance(phi, HeavyTailPair) else None
    norm = normalization(spec, T, f=f, g1=g1, L=L)
    X = window_policy.x_max(norm.D_T, b)
    field_ = sample_particle_field(spec.params, L, (-X, X), rng.child(0))
    step = norm.D_T * dt
    counts = _prefix_counts(times, dt)
    n = int(counts.max())
    sup = phi.support
    total = np.zeros(times.size)
    for j, (x, z) in enumerate(zip(field_.x, field_.z)):
        gen = rng.child(j + 1).generator()
        eta = np.concatenate([[0.0], np.cumsum(sample_increments(model, step, n - 1, gen))])
        pos = norm.C_T * x + eta
        if sup is not None and (pos.max() < sup[0] or pos.min() > sup[1]):
            continue  # path never meets the support of phi
        total += z * step * _prefix_sums(phi(pos), counts)
    warn = []
    trunc = window_policy.truncation_error(b, times.max()) if phi.tail_exponents is None else 0.0
    if trunc > window_policy.tolerance:
        warn.append(f"window truncation estimate {trunc:.3g} exceeds {window_policy.tolerance:g}")
    return FunctionalSample(times, total / norm.scale, spec.family.value, float(T),
                            rng.stream_id, rng.seed, warn)


# ---------------------------------------------------------------------------
# pooled particle engine

_CHUNK = 4096


def truncated_exponent(w, alpha):
    """``G(w) = 2 int_0^w (1 - cos v) v**(-1-alpha) dv`` (vectorized, ``w >= 0``)."""
    w = np.asarray(w, dtype=float)
    c = stable_constant(alpha)
    out = np.empty_like(w)
    small = w <= 8.0
    ws = w[small]
    acc = np.zeros_like(ws)
    term_fact = 1.0
    for k in range(1, 40):
        term_fact *= (2 * k - 1) * (2 * k)
        acc += (-1) ** (k + 1) * ws ** (2 * k - alpha) / (term_fact * (2 * k - alpha))
    out[small] = 2 * acc
    big = ~small
    if np.any(big):
        wb = w[big]
        tail = np.array([integrate_1d(lambda v: (1 - math.cos(v)) * v ** (-1 - alpha), u, np.inf,
                                      strict=False, limit=2000)[0] for u in wb])
        out[big] = c - 2 * tail
    return out


def _coarse_grid(K, dx):
    n = int(round(2 * K / dx))
    return np.linspace(-K, K, n + 1)


def _trapezoid_weights(n, dx):
    w = np.full(n, dx)
    w[[0, -1]] = dx / 2
    return w


@dataclass
class PrelimitPool:
    """Pooled occupation profiles ``F_p(x', t)`` for one ``T``."""

    spec: LimitSpec
    T: float
    times: np.ndarray
    xgrid: np.ndarray
    F: np.ndarray              # (n_paths, n_x, n_times)
    factor: float
    delta: float               # scaled weight cutoff
    far_scale: float = 0.0     # scale of the analytic far field (heavy tails)

    @property
    def n_paths(self):
        return self.F.shape[0]

    @property
    def dx(self):
        return float(self.xgrid[1] - self.xgrid[0])

    def sample(self, n_replicas, rng: RngSpec, epsilon_factor=1.0, workers=None):
        """``(n_replicas, n_times)`` draws; replica ``r`` uses ``rng.child(r)``.

        Particles are generated in decreasing order of ``|z'|`` from Poisson
        arrival times, in fixed-size chunks, so the scaled point process of a
        replica does not depend on ``T`` or on the cutoff: only the number of
        particles used does.
        """
        return map_blocks(lambda a, n: self._sample_block(a, n, rng, epsilon_factor),
                          n_replicas, workers)

    def _sample_block(self, start, n_replicas, rng, epsilon_factor):
        a = self.spec.params.alpha
        delta = self.delta * epsilon_factor
        K = float(self.xgrid[-1])
        rate = 2 * K * (2 / a)                       # intensity of |z'| > u is rate u**-a
        mean_count = rate * delta ** (-a)
        nx = self.xgrid.size
        out = np.empty((n_replicas, self.times.size))
        for i in range(n_replicas):
            spec_r = rng.child(start + i)
            gen = spec_r.generator()
            G, x, sg, p = [], [], [], []
            last = 0.0
            while last < mean_count:
                g = last + np.cumsum(gen.standard_exponential(_CHUNK))
                G.append(g)
                x.append(gen.uniform(-K, K, _CHUNK))
                sg.append(gen.random(_CHUNK) < 0.5)
                p.append(gen.integers(0, self.n_paths, _CHUNK))
                last = g[-1]
            G = np.concatenate(G)
            n = int(np.searchsorted(G, mean_count))
            z = (G[:n] / rate) ** (-1 / a)
            z[np.concatenate(sg)[:n]] *= -1.0
            g = np.clip(np.rint((np.concatenate(x)[:n] + K) / self.dx).astype(np.int64), 0, nx - 1)
            out[i] = z @ self.F[np.concatenate(p)[:n], g, :]
            if self.far_scale > 0:
                far = stable_rvs(a, None, spec_r.child(0).generator(), self.far_scale)
                out[i] += self.times * far
        return out

    def cf(self, theta, coeffs):
        """Exact CF of ``sum_j a_j G_{t_j}`` given the pool, with its pool SE."""
        a = self.spec.params.alpha
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        coeffs = np.asarray(coeffs, dtype=float)
        u = np.abs(self.F @ coeffs)                 # (n_paths, n_x)
        w = _trapezoid_weights(self.xgrid.size, self.dx)
        c = stable_constant(a)
        vals, ses = [], []
        for th in theta:
            arg = np.abs(th) * u
            per = (arg ** a * (c - truncated_exponent(arg * self.delta, a))) @ w
            far = (self.far_scale * abs(th * coeffs @ self.times)) ** a
            lp = per.mean() + far
            phi_ = math.exp(-lp)
            vals.append(phi_)
            ses.append(phi_ * per.std(ddof=1) / math.sqrt(per.size))
        return np.array(vals), np.array(ses)


def _profile_intervals(srt, xg, s, pieces):
    out = np.zeros(xg.size)
    for lo, hi, c in pieces:
        out += c * (np.searchsorted(srt, hi / s - xg, side="right")
                    - np.searchsorted(srt, lo / s - xg, side="right"))
    return out


def _profile_fft(prefix, xg, s, antideriv, sub):
    """``sum_k kernel(s (x' + xi_k))`` with the kernel averaged over lattice bins."""
    b = (xg[1] - xg[0]) / sub
    lo = math.floor(prefix.min() / b) * b
    idx = np.floor((prefix - lo) / b).astype(np.int64)
    cnt = np.bincount(idx).astype(float)
    ny = cnt.size
    nxf = (xg.size - 1) * sub + 1
    # u_k = x_0 + lo + (k + 1/2) b, k = 0 .. nxf + ny - 2
    u = xg[0] + lo + (np.arange(nxf + ny - 1) + 0.5) * b
    A = (antideriv(s * (u + b / 2)) - antideriv(s * (u - b / 2))) / (s * b)
    full = signal.fftconvolve(A, cnt[::-1], mode="valid")
    return full[::sub]


def _path_profiles(xi, dt, counts, xg, scales, phi, sub):
    """Raw sums ``dt sum_{k dt < t} phi(s (x' + xi_k))`` per time on ``xg``, for each ``s``.

    Returns ``(len(scales), n_x, n_times)``.
    """
    out = np.zeros((len(scales), xg.size, counts.size))
    sorted_prefix = None
    if isinstance(phi, (IntervalCombination, HeavyTailPair)):
        order = np.argsort(xi, kind="stable")
        srt_all = xi[order]
        sorted_prefix = [srt_all[order < n] for n in counts]
    for j, n in enumerate(counts):
        for i, s in enumerate(scales):
            if isinstance(phi, IntervalCombination):
                out[i, :, j] = _profile_intervals(sorted_prefix[j], xg, s, phi.pieces)
            elif isinstance(phi, HeavyTailPair):
                out[i, :, j] = _profile_intervals(sorted_prefix[j], xg, s, phi.core().pieces)
                out[i, :, j] += _profile_fft(xi[:n], xg, s, phi.tail_antiderivative, sub)
            else:
                out[i, :, j] = _profile_fft(xi[:n], xg, s, phi.antiderivative, sub)
    return dt * out


def pool_factor(spec: LimitSpec, T, phi):
    g1 = SlowlyVarying.constant(phi.amp1) if isinstance(phi, HeavyTailPair) else None
    norm = normalization(spec, T, g1=g1)
    a, b = spec.params.alpha, spec.params.beta
    return T ** (1 + 1 / (a * b)) / norm.scale


def far_field_scale(spec: LimitSpec, phi, T, K):
    """Scale of ``sum_{|x'|>K} z' F(x')`` with ``F(x', t) ~ t h(x')``."""
    if not isinstance(phi, HeavyTailPair):
        return 0.0
    a, b = spec.params.alpha, spec.params.beta
    s = T ** (1 / b)
    g = spec.gamma
    amps = (phi.amp1 * s ** (g - phi.gamma1) / phi.amp1, phi.amp2 * s ** (g - phi.gamma2) / phi.amp1)
    tot = 0.0
    for amp, gam in zip(amps, (phi.gamma1, phi.gamma2)):
        tot += amp ** a * K ** (1 - gam * a) / (gam * a - 1)
    return (stable_constant(a) * tot) ** (1 / a)


def build_prelimit_pools(spec: LimitSpec, phi: TestFunctionPhi, Ts, times, rng: RngSpec,
                         n_paths=2000, dt=1e-4, K=10.0, dx=0.02, sub=10, workers=None):
    """Pools for every ``T``, sharing the rescaled paths (common random numbers).

    Requires a pure beta-stable motion and ``L == 1``.  Pool path ``p`` uses
    stream ``rng.child(p)``.
    """
    b, a = spec.params.beta, spec.params.alpha
    times = np.asarray(times, dtype=float)
    counts = _prefix_counts(times, dt)
    n = int(counts.max())
    xg = _coarse_grid(K, dx)
    Ts = [float(T) for T in Ts]

    def block(start, count):
        F = {T: np.empty((count, xg.size, times.size)) for T in Ts}
        for i in range(count):
            gen = rng.child(start + i).generator()
            xi = np.concatenate([[0.0], np.cumsum(stable_rvs(b, n - 1, gen, dt ** (1 / b)))])
            prof = _path_profiles(xi, dt, counts, xg, [T ** (1 / b) for T in Ts], phi, sub)
            for k, T in enumerate(Ts):
                F[T][i] = prof[k]
        return {str(T): F[T] for T in Ts}

    F = map_blocks(block, int(n_paths), workers)
    pools = {}
    for T in Ts:
        fac = pool_factor(spec, T, phi)
        delta = spec.params.epsilon_cut * T ** (-1 / (a * b))
        pools[T] = PrelimitPool(spec, T, times, xg, F[str(T)] * fac, fac, delta,
                                far_field_scale(spec, phi, T, K))
    return pools


def prelimit_cf(pool: PrelimitPool, theta, coeffs):
    return pool.cf(theta, coeffs)


def check_pool_window(pool: PrelimitPool, phi, tolerance=1e-3):
    """Warn when the window truncation estimate exceeds ``tolerance``."""
    if phi.tail_exponents is not None:
        return 0.0
    est = WindowPolicy(float(pool.xgrid[-1]), tolerance).truncation_error(
        pool.spec.params.beta, float(pool.times.max()))
    if est > tolerance:
        warnings.warn(f"window truncation estimate {est:.3g} exceeds {tolerance:g}")
    return est


__all__ = [
    "FunctionalSample", "PrelimitPool", "WindowPolicy", "build_prelimit_pools",
    "check_pool_window", "far_field_scale", "particle_functional_sample", "pool_factor",
    "prelimit_cf", "prop1_ladder", "prop1_sample", "read_jsonl", "rosen_ladder",
    "rosen_sample", "samples_from_array", "truncated_exponent", "write_jsonl",
]
