"""Characteristic functions of the stable limit processes.

All three limits are stable integrals ``int K_t(x, w') M_alpha(dx, dw')``
whose finite-dimensional characteristic functions are

    Phi(theta) = exp(-c(alpha) int E|theta sum_j a_j K_{t_j}(x)|**alpha dx)

with kernel ``K = L`` (first order), ``K = W o L`` (second order) or the
fractional local-time kernels ``Z``/``Z~`` (heavy tails).  The inner
expectations are averages over a :class:`FieldPool` of simulated local-time
fields shared by every ``theta``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .localtime import LocalTimeField, occupation_counts
from .model import LimitSpec, stable_constant
from .parallel import map_blocks
from .sampling import RngSpec, stable_rvs

CSV_SCHEMA = "hsssi.cf/1"


@dataclass(frozen=True)
class CfQuery:
    theta: np.ndarray
    coeffs: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        a = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        if a.size < 1 or a.size != t.size:
            raise ValueError("need m >= 1 coefficients, one per time")
        if np.any(np.diff(t) < 0) or np.any(t < 0):
            raise ValueError("times must be sorted and non-negative")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "times", t)


@dataclass
class CfResult:
    theta: np.ndarray
    values: np.ndarray         # complex
    se: np.ndarray
    exponent: float            # int E|sum a_j K_j|**alpha dx (without theta, c(alpha))

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# schema: {CSV_SCHEMA}\n")
        buf.write("theta,re,im,stderr\n")
        for th, v, e in zip(self.theta, self.values, self.se):
            buf.write(",".join(repr(float(u)) for u in (th, v.real, v.imag, e)) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# ---------------------------------------------------------------------------
# heavy-tail kernels

def hat_weights(gamma, b, n):
    """``w_k = int hat_k(y) y**-gamma dy`` for nodes ``y_k = k b``, ``k = 1..n``.

    ``hat_k`` is the piecewise-linear hat at ``y_k``; on ``[0, b]`` the
    interpolant starts from the node value 0, which is what makes the
    singular part integrable for ``gamma < 2``.
    """
    k = np.arange(1, n + 1, dtype=float)
    g = gamma

    def I0(lo, hi):
        return (hi ** (1 - g) - lo ** (1 - g)) / (1 - g)

    def I1(lo, hi):
        return (hi ** (2 - g) - lo ** (2 - g)) / (2 - g)

    left = I1(k - 1, k) - (k - 1) * I0(np.maximum(k - 1, 1e-300), k)
    left[0] = I1(0.0, 1.0)  # (k-1) I0 term vanishes on the first cell
    right = (k + 1) * I0(k, k + 1) - I1(k, k + 1)
    return b ** (1 - g) * (left + right)


def hat_weights_total(gamma, b):
    """``sum_{k>=1} w_k = int (1 - hat_0) y**-gamma dy``."""
    return b ** (1 - gamma) * (1 / (2 - gamma) + 1 / (gamma - 1))


def lattice_kernel(L, gamma, b, variant="symmetric"):
    """``Z`` (or ``Z~``) at every node of a zero-padded lattice field ``L``."""
    n = L.size
    w = hat_weights(gamma, b, n)
    # forward[j] = sum_k w_k L[j+k], backward[j] = sum_k w_k L[j-k]
    wz = np.concatenate([[0.0], w])
    back = signal.fftconvolve(L, wz)[:n]
    fwd = signal.fftconvolve(L[::-1], wz)[:n][::-1]
    if variant == "symmetric":
        return fwd - back
    if variant == "asymmetric":
        return fwd - L * hat_weights_total(gamma, b)
    raise ValueError("variant must be 'symmetric' or 'asymmetric'")


def kernel_Z(field: LocalTimeField, gamma, x, variant="symmetric", y0_cells=10):
    """``Z_t(x)`` (symmetric) or ``Z~_t(x)`` (asymmetric) from one field, per time.

    The increment ``D(y) = L(x+y) - L(x-y)`` (resp. ``L(x+y) - L(x)``) is
    interpolated linearly between nodes ``y_k = k dx``; the integral against
    ``y**-gamma`` uses exact hat weights, so the singular part on
    ``[0, y0]`` is integrated exactly for the interpolant.  Beyond the grid
    the field is zero, and the asymmetric kernel adds ``-L(x) Y**(1-gamma)/(gamma-1)``
    for the part of the half-line past the field.
    """
    if isinstance(gamma, (tuple, list)):
        gamma = min(gamma)
    if not 1 < gamma < 2:
        raise ValueError("gamma must lie in (1, 2)")
    xg = field.xgrid
    dx = field.dx
    if dx <= 0:
        raise ValueError("field grid too coarse: need at least two nodes")
    if x < xg[0] - dx or x > xg[-1] + dx:
        raise ValueError("x outside the field grid")
    span = max(xg[-1] - x, x - xg[0])
    n = int(math.ceil(span / dx)) + 1
    n = max(n, y0_cells)
    y = dx * np.arange(1, n + 1)
    w = hat_weights(gamma, dx, n)
    out = np.empty(field.times.size)
    for i, row in enumerate(field.table):
        def Lx(u):
            return np.interp(u, xg, row, left=0.0, right=0.0)
        if variant == "symmetric":
            out[i] = w @ (Lx(x + y) - Lx(x - y))
        elif variant == "asymmetric":
            out[i] = w @ Lx(x + y) - float(Lx(x)) * hat_weights_total(gamma, dx)
        else:
            raise ValueError("variant must be 'symmetric' or 'asymmetric'")
    return out


def kernel_profile(field: LocalTimeField, gamma, variant="symmetric"):
    """Kernel at every grid node of ``field`` (zero padding outside); ``(n_times, n_x)``."""
    return np.array([lattice_kernel(row, gamma, field.dx, variant) for row in field.table])


# ---------------------------------------------------------------------------
# pools of local-time fields

def _coarse_grid(K, dx):
    n = int(round(2 * K / dx))
    return np.linspace(-K, K, n + 1)


def _trapezoid_weights(n, dx):
    w = np.full(n, dx)
    w[[0, -1]] = dx / 2
    return w


@dataclass
class FieldPool:
    """Local-time fields (and optionally heavy kernels) for ``n_paths`` paths.

    ``L`` has shape ``(n_paths, n_times, n_x)`` on the coarse grid
    ``[-K, K]``; ``Z`` (heavy families) has the same shape.
    """

    beta: float
    times: np.ndarray
    xgrid: np.ndarray
    L: np.ndarray
    Z: np.ndarray | None = None
    gamma: float | None = None
    variant: str | None = None
    bandwidth: float = 0.0

    @property
    def n_paths(self):
        return self.L.shape[0]

    @property
    def dx(self):
        return float(self.xgrid[1] - self.xgrid[0])

    @property
    def weights(self):
        return _trapezoid_weights(self.xgrid.size, self.dx)

    @classmethod
    def build(cls, beta, times, n_paths, rng: RngSpec, dt=1e-4, K=10.0, dx=0.02,
              bandwidth=None, gamma=None, variant=None, sub=None, workers=None):
        """Simulate ``n_paths`` paths (path ``p`` on ``rng.child(p)``).

        Fields use the box estimator with ``h = dt**(1/beta)``.  For heavy
        kernels a fine lattice of spacing ``dx / sub`` carries cell-occupation
        fields from which ``Z`` is computed and then sampled on the grid.
        ``sub`` defaults to ``round(dx / dt**(1/beta))``: the singular kernel
        blows up on lattices much finer than the step scale and is biased on
        coarser ones.
        """
        times = np.asarray(times, dtype=float)
        xg = _coarse_grid(K, dx)
        h = dt ** (1 / beta) if bandwidth is None else float(bandwidth)
        if sub is None:
            sub = max(1, int(round(dx / dt ** (1 / beta))))
        if gamma is not None and variant not in ("symmetric", "asymmetric"):
            raise ValueError("variant must be 'symmetric' or 'asymmetric'")

        def block(start, count):
            return _field_block(beta, times, xg, h, dt, K, dx, gamma, variant, sub, rng,
                                start, count)

        parts = map_blocks(block, int(n_paths), workers)
        return cls(beta, times, xg, parts["L"], parts.get("Z"), gamma, variant, h)

    def field(self, p) -> LocalTimeField:
        return LocalTimeField(self.xgrid, self.times, self.L[p].astype(float), self.bandwidth)

    def time_index(self, times):
        idx = []
        for t in np.atleast_1d(times):
            hit = np.flatnonzero(np.isclose(self.times, t))
            if hit.size == 0:
                raise ValueError(f"time {t} not in the pool (pool times {self.times.tolist()})")
            idx.append(int(hit[0]))
        return np.array(idx)


def _field_block(beta, times, xg, h, dt, K, dx, gamma, variant, sub, rng, start, count):
    counts = np.array([int(math.ceil(t / dt - 1e-9)) for t in times])
    n = max(int(counts.max()), 1)
    L = np.empty((count, times.size, xg.size), dtype=np.float32)
    Z = np.empty_like(L) if gamma is not None else None
    b = dx / sub
    for i in range(count):
        gen = rng.child(start + i).generator()
        xi = np.concatenate([[0.0], np.cumsum(stable_rvs(beta, n - 1, gen, dt ** (1 / beta)))])
        L[i] = occupation_counts(xi, dt, xg, h, times) * dt / (2 * h)
        if gamma is not None:
            lo = min(-K, math.floor(xi.min() / b) * b) - b
            hi = max(K, math.ceil(xi.max() / b) * b) + b
            i0 = int(round((lo + K) / b))  # lattice index of lo relative to -K
            nl = int(round((hi - lo) / b)) + 1
            idx = np.rint((xi - lo) / b).astype(np.int64)
            grid_pos = -i0 + np.arange(xg.size) * sub
            for j, c in enumerate(counts):
                lat = np.bincount(idx[:c], minlength=nl).astype(float) * dt / b
                Z[i, j] = lattice_kernel(lat, gamma, b, variant)[grid_pos]
    return {"L": L} if Z is None else {"L": L, "Z": Z}


def _exponent_from_kernel(values, coeffs, alpha, weights):
    """Per-path ``int |sum_j a_j K_j(x)|**alpha dx``; ``values`` is ``(P, m, n_x)``."""
    comb = np.einsum("j,pjx->px", coeffs, values, optimize=True)
    return np.abs(comb) ** alpha @ weights


def _cf_from_exponent(theta, alpha, per_path, scale=1.0, extra=0.0):
    """``exp(-c(alpha) |theta scale|**alpha (mean + extra))`` and its pool SE."""
    c = stable_constant(alpha)
    I = float(np.mean(per_path)) + extra
    se_I = float(np.std(per_path, ddof=1) / math.sqrt(per_path.size)) if per_path.size > 1 else 0.0
    k = c * np.abs(np.asarray(theta) * scale) ** alpha
    vals = np.exp(-k * I)
    return vals.astype(complex), vals * k * se_I, I


def _default_pool(beta, times, mc_replicas, rng, **kw):
    return FieldPool.build(beta, times, int(mc_replicas), rng or RngSpec(0), **kw)


def cf_first_order(query: CfQuery, alpha, beta, int_phi=1.0, mc_replicas=20000,
                   pool: FieldPool | None = None, rng: RngSpec | None = None) -> CfResult:
    if int_phi == 0:
        raise ValueError("first-order limit needs int phi != 0")
    pool = pool or _default_pool(beta, query.times, mc_replicas, rng)
    vals = pool.L[:, pool.time_index(query.times), :]
    per = _exponent_from_kernel(vals, query.coeffs, alpha, pool.weights)
    v, se, I = _cf_from_exponent(query.theta, alpha, per, int_phi)
    return CfResult(query.theta, v, se, I)


def brownian_abs_moment(alpha):
    """``m_alpha = E|N(0,1)|**alpha = 2**(alpha/2) Gamma((alpha+1)/2) / sqrt(pi)``."""
    return 2 ** (alpha / 2) * math.gamma((alpha + 1) / 2) / math.sqrt(math.pi)


def conditional_variance(Lvals, coeffs):
    """Variance of ``sum_j a_j W_{L_j}`` given ``L_1 <= ... <= L_m``; ``Lvals`` is ``(P, m, n_x)``."""
    tails = np.cumsum(coeffs[::-1])[::-1]          # sum_{j>=k} a_j
    inc = np.diff(Lvals, axis=1, prepend=0.0)
    return np.einsum("k,pkx->px", tails ** 2, inc, optimize=True)


def cf_second_order(query: CfQuery, alpha, beta, cphi=1.0, mc_replicas=20000,
                    pool: FieldPool | None = None, rng: RngSpec | None = None,
                    method="conditional") -> CfResult:
    """Second-order limit; ``method`` is ``"conditional"`` (exact Gaussian
    conditioning) or ``"sampled"`` (Brownian values drawn per path and x)."""
    pool = pool or _default_pool(beta, query.times, mc_replicas, rng)
    Lv = pool.L[:, pool.time_index(query.times), :].astype(float)
    w = pool.weights
    if method == "conditional":
        var = np.maximum(conditional_variance(Lv, query.coeffs), 0.0)
        per = brownian_abs_moment(alpha) * var ** (alpha / 2) @ w
    elif method == "sampled":
        gen = (rng or RngSpec(0)).child(10 ** 6).generator()
        inc = np.maximum(np.diff(Lv, axis=1, prepend=0.0), 0.0)
        Wv = np.cumsum(gen.standard_normal(inc.shape) * np.sqrt(inc), axis=1)
        per = _exponent_from_kernel(Wv, query.coeffs, alpha, w)
    else:
        raise ValueError("method must be 'conditional' or 'sampled'")
    v, se, I = _cf_from_exponent(query.theta, alpha, per, cphi)
    return CfResult(query.theta, v, se, I)


def heavy_far_field(query: CfQuery, alpha, gamma, K, variant):
    """``int_{|x|>K} |sum_j a_j t_j|**alpha |x|**(-gamma alpha) dx`` (one side if asymmetric)."""
    ga = gamma * alpha
    if ga <= 1:
        raise ValueError("far field diverges: need gamma * alpha > 1")
    sides = 2 if variant == "symmetric" else 1
    return abs(query.coeffs @ query.times) ** alpha * sides * K ** (1 - ga) / (ga - 1)


def cf_heavy(query: CfQuery, alpha, beta, gamma, variant="symmetric", mc_replicas=20000,
             pool: FieldPool | None = None, rng: RngSpec | None = None) -> CfResult:
    """Heavy-tail limit with kernel ``Z`` (symmetric) or ``Z~`` (asymmetric).

    The part of the ``x`` integral beyond the pool window uses
    ``Z_t(x) ~ -sign(x) t |x|**-gamma`` (``Z~_t(x) ~ t |x|**-gamma`` for ``x < 0``).
    """
    if isinstance(gamma, (tuple, list)):
        gamma = min(gamma)
    if pool is None:
        pool = _default_pool(beta, query.times, mc_replicas, rng, gamma=gamma, variant=variant)
    if pool.Z is None or pool.gamma != gamma or pool.variant != variant:
        raise ValueError("pool does not carry the requested heavy kernel")
    vals = pool.Z[:, pool.time_index(query.times), :]
    per = _exponent_from_kernel(vals, query.coeffs, alpha, pool.weights)
    far = heavy_far_field(query, alpha, gamma, float(pool.xgrid[-1]), variant)
    v, se, I = _cf_from_exponent(query.theta, alpha, per, 1.0, far)
    return CfResult(query.theta, v, se, I)


def limit_cf(spec: LimitSpec, query: CfQuery, pool: FieldPool, scale=1.0) -> CfResult:
    """Dispatch on the family; ``scale`` is ``int phi`` or ``c(phi)`` where relevant."""
    a, b = spec.params.alpha, spec.params.beta
    fam = spec.family.value
    if fam == "first-order":
        return cf_first_order(query, a, b, scale, pool=pool)
    if fam == "second-order":
        return cf_second_order(query, a, b, scale, pool=pool)
    variant = "symmetric" if fam == "heavy-symmetric" else "asymmetric"
    return cf_heavy(query, a, b, spec.gamma, variant, pool=pool)


# ---------------------------------------------------------------------------
# LePage series

def lepage_constant(alpha):
    """``C_alpha = (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2))``."""
    return (1 - alpha) / (math.gamma(2 - alpha) * math.cos(math.pi * alpha / 2))


@dataclass
class LepageResult:
    values: np.ndarray         # (n_samples, m)
    values_half: np.ndarray    # same draws truncated at N/2 terms
    n_terms: int

    @property
    def truncation_change(self):
        """Median relative change between ``N/2`` and ``N`` terms."""
        d = np.abs(self.values - self.values_half).ravel()
        return float(np.median(d) / max(np.median(np.abs(self.values).ravel()), 1e-300))


def lepage_sample(spec: LimitSpec | str, times, n_terms, pool: FieldPool, rng: RngSpec,
                  n_samples=1, scale=1.0, gaussian_remainder=True) -> LepageResult:
    """Approximate draws of the limit law from the LePage series.

    ``X = (c(alpha) C_alpha |W|)**(1/alpha) sum_{i<=N} Gamma_i**(-1/alpha) e_i K_i``
    with ``K_i`` the kernel of a uniformly chosen pool path at a uniform
    location of the window ``W``.  The neglected terms are replaced by a
    Gaussian with the matching conditional variance when
    ``gaussian_remainder``.  ``spec`` may be ``"zero"`` for a zero kernel.
    """
    if n_terms < 100:
        raise ValueError("need at least 100 terms")
    times = np.asarray(times, dtype=float)
    if isinstance(spec, str):
        fam, alpha = spec, 1.5
    else:
        fam, alpha = spec.family.value, spec.params.alpha
    ti = pool.time_index(times)
    K = float(pool.xgrid[-1])
    width = 2 * K
    pref = (stable_constant(alpha) * lepage_constant(alpha) * width) ** (1 / alpha) * scale
    nx = pool.xgrid.size
    out = np.zeros((n_samples, times.size))
    half = np.zeros_like(out)
    ksq_mean = None
    for r in range(n_samples):
        gen = rng.child(r).generator()
        G = np.cumsum(gen.standard_exponential(n_terms))
        eps = np.where(gen.random(n_terms) < 0.5, -1.0, 1.0)
        p = gen.integers(0, pool.n_paths, n_terms)
        g = np.clip(np.rint((gen.uniform(-K, K, n_terms) + K) / pool.dx).astype(np.int64), 0, nx - 1)
        if fam == "zero":
            Kv = np.zeros((n_terms, times.size))
        elif fam == "first-order":
            Kv = pool.L[p][:, ti, :][np.arange(n_terms), :, g].astype(float)
        elif fam == "second-order":
            Lv = pool.L[p][:, ti, :][np.arange(n_terms), :, g].astype(float)
            inc = np.maximum(np.diff(Lv, axis=1, prepend=0.0), 0.0)
            Kv = np.cumsum(gen.standard_normal(inc.shape) * np.sqrt(inc), axis=1)
        else:
            Kv = pool.Z[p][:, ti, :][np.arange(n_terms), :, g].astype(float)
        wts = (G ** (-1 / alpha) * eps)[:, None] * Kv
        out[r] = wts.sum(axis=0)
        half[r] = wts[: n_terms // 2].sum(axis=0)
        if gaussian_remainder and fam != "zero":
            if ksq_mean is None:
                ksq_mean = _kernel_second_moment(pool, fam, ti)
            for arr, n in ((out, n_terms), (half, n_terms // 2)):
                # sum_{i>n} Gamma_i**(-2/alpha) ~ n**(1-2/alpha) / (2/alpha - 1)
                rem = n ** (1 - 2 / alpha) / (2 / alpha - 1)
                arr[r] += gen.multivariate_normal(np.zeros(times.size), rem * ksq_mean,
                                                  method="cholesky") if times.size > 1 else \
                    gen.standard_normal(1) * math.sqrt(rem * ksq_mean[0, 0])
    return LepageResult(pref * out, pref * half, n_terms)


def _kernel_second_moment(pool, fam, ti):
    """``E[K K^T]`` over paths and window locations."""
    w = pool.weights / pool.weights.sum()
    if fam == "first-order":
        V = pool.L[:, ti, :].astype(float)
        return np.einsum("pix,pjx,x->ij", V, V, w, optimize=True) / pool.n_paths
    if fam == "second-order":
        V = pool.L[:, ti, :].astype(float)
        m = np.minimum(V[:, :, None, :], V[:, None, :, :])
        return np.einsum("pijx,x->ij", m, w, optimize=True) / pool.n_paths
    V = pool.Z[:, ti, :].astype(float)
    M = np.einsum("pix,pjx,x->ij", V, V, w, optimize=True) / pool.n_paths
    return M + 1e-15 * np.eye(M.shape[0])


__all__ = [
    "CfQuery", "CfResult", "FieldPool", "LepageResult", "brownian_abs_moment",
    "cf_first_order", "cf_heavy", "cf_second_order", "conditional_variance", "hat_weights",
    "hat_weights_total", "heavy_far_field", "kernel_Z", "kernel_profile", "lattice_kernel",
    "lepage_constant", "lepage_sample", "limit_cf",
]
