"""Seeded sampling of stable variables, Levy paths and Poisson particle fields.

Every random quantity is drawn from a generator derived from a
:class:`RngSpec`, i.e. from ``numpy.random.SeedSequence(seed, spawn_key)``.
Distinct stream ids give independent streams and equal specs give identical
bytes, independently of how work is split across workers.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import LevyModel, ModelParams, SlowlyVarying
from .quadrature import integrate_1d


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64 and 0 <= int(self.stream_id) < 2 ** 64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    @property
    def spawn_key(self):
        return (int(self.stream_id),) + tuple(int(k) for k in self.path)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.spawn_key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream_id, self.path + (int(k),))

    def stream(self, stream_id: int) -> "RngSpec":
        return RngSpec(self.seed, int(stream_id), self.path)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# stable variables

def stable_rvs(beta, size=None, rng=None, scale=1.0):
    """Symmetric stable draws with characteristic function ``exp(-|scale t|**beta)``.

    Chambers-Mallows-Stuck construction.
    """
    gen = as_generator(rng)
    V = gen.uniform(-np.pi / 2, np.pi / 2, size)
    W = gen.standard_exponential(size)
    if beta == 1.0:
        return scale * np.tan(V)
    X = (np.sin(beta * V) / np.cos(V) ** (1.0 / beta)
         * (np.cos(V - beta * V) / W) ** ((1.0 - beta) / beta))
    return scale * X


def sample_stable_increment(beta, scale=1.0, rng=None, size=None):
    if not 1 < beta < 2:
        raise ValueError("beta must lie in (1,2)")
    return stable_rvs(beta, size, rng, scale)


# ---------------------------------------------------------------------------
# power tails with a slowly varying factor

class PowerTailSampler:
    """Draws from the density proportional to ``sv(x) x**(-1-index)`` on ``x >= lower``.

    For a constant ``sv`` this is an exact Pareto draw.  Otherwise the
    half-line is cut into geometric cells; on each cell the envelope
    ``sv(right edge) x**(-1-index)`` is sampled exactly and accepted with
    probability ``sv(x) / sv(right edge)`` (the presets are non-decreasing).
    Cells stop once the envelope mass beyond them is below 1e-17 relative.
    """

    def __init__(self, index, lower, sv: SlowlyVarying | None = None, ratio=1.5):
        self.index = float(index)
        self.lower = float(lower)
        self.sv = sv or SlowlyVarying.constant(1.0)
        if self.sv.is_constant:
            self.edges = None
            return
        a = self.index
        k_max = int(math.ceil(math.log(1e20) / (a * math.log(ratio)))) + 1
        while True:
            edges = self.lower * ratio ** np.arange(k_max + 1)
            env = self.sv(edges[1:]) * (edges[:-1] ** -a - edges[1:] ** -a) / a
            beyond = self.sv(edges[-1] ** 2) * edges[-1] ** -a / a
            if beyond < 1e-17 * env.sum():
                break
            k_max *= 2
        self.edges = edges
        self.cell_cdf = np.cumsum(env) / env.sum()
        self.cell_cap = self.sv(edges[1:])

    def mass(self):
        """``int_lower^inf sv(x) x**(-1-index) dx``."""
        if self.sv.is_constant:
            return self.sv.c * self.lower ** -self.index / self.index
        return integrate_1d(lambda x: float(self.sv(x)) * x ** (-1 - self.index),
                            self.lower, np.inf)[0]

    def sample(self, n, rng=None):
        gen = as_generator(rng)
        a = self.index
        if self.edges is None:
            return self.lower * (1.0 - gen.random(n)) ** (-1.0 / a)
        out = np.empty(n)
        todo = np.arange(n)
        while todo.size:
            m = todo.size
            cell = np.searchsorted(self.cell_cdf, gen.random(m), side="right")
            cell = np.minimum(cell, self.cell_cdf.size - 1)
            lo, hi = self.edges[cell], self.edges[cell + 1]
            u = gen.random(m)
            # inverse CDF of the truncated Pareto on [lo, hi]
            x = (lo ** -a - u * (lo ** -a - hi ** -a)) ** (-1.0 / a)
            ok = gen.random(m) * self.cell_cap[cell] <= self.sv(x)
            out[todo[ok]] = x[ok]
            todo = todo[~ok]
        return out


# ---------------------------------------------------------------------------
# paths

_HEADER = struct.Struct("<ddq")


@dataclass(frozen=True)
class PathGrid:
    dt: float
    horizon: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != int(math.floor(self.horizon / self.dt + 1e-9)) + 1:
            raise ValueError("values must have floor(horizon/dt)+1 entries")
        if v[0] != 0 or not np.all(np.isfinite(v)):
            raise ValueError("path must start at 0 and be finite")
        object.__setattr__(self, "values", v)

    @property
    def n_steps(self):
        return self.values.size - 1

    @property
    def times(self):
        return self.dt * np.arange(self.values.size)

    @property
    def increments(self):
        return np.diff(self.values)

    def to_bytes(self) -> bytes:
        return _HEADER.pack(self.dt, self.horizon, self.values.size) + \
            self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "PathGrid":
        dt, horizon, count = _HEADER.unpack_from(buf)
        vals = np.frombuffer(buf, dtype="<f8", count=count, offset=_HEADER.size)
        return cls(dt, horizon, vals.astype(float))

    def dump(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path):
        return cls.from_bytes(Path(path).read_bytes())


def _n_steps(horizon, dt):
    if not 0 < dt <= horizon:
        raise ValueError("need 0 < dt <= horizon")
    return int(math.floor(horizon / dt + 1e-9))


class RvIncrementSampler:
    """Increments over ``dt`` of an rv-density Levy motion.

    Jumps larger than ``delta = dt**(1/beta)`` form a compound Poisson
    process sampled exactly; the remaining small-jump part is replaced by a
    centred Gaussian with the same variance ``dt int_{|x| <= delta} x**2 nu(dx)``
    (accurate for ``|theta| delta <~ 1``; beyond that the increment CF is
    already negligible).
    """

    def __init__(self, model: LevyModel, dt):
        self.model, self.dt = model, float(dt)
        b = model.beta
        self.delta = self.dt ** (1.0 / b)
        self.rate = model.jump_rate(self.delta)
        self.jumps = PowerTailSampler(b, self.delta, model.slowly_varying)
        self.small_sd = math.sqrt(self.dt * model.small_jump_variance(self.delta))

    def sample(self, shape, rng=None):
        gen = as_generator(rng)
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape))
        out = self.small_sd * gen.standard_normal(n)
        counts = gen.poisson(self.dt * self.rate, n)
        total = int(counts.sum())
        if total:
            sizes = self.jumps.sample(total, gen) * np.where(gen.random(total) < 0.5, -1.0, 1.0)
            out += np.bincount(np.repeat(np.arange(n), counts), weights=sizes, minlength=n)
        return out.reshape(shape)


def sample_increments(model: LevyModel, dt, shape, rng=None):
    gen = as_generator(rng)
    if model.f is None:
        return stable_rvs(model.beta, shape, gen, dt ** (1.0 / model.beta))
    return RvIncrementSampler(model, dt).sample(shape, gen)


def simulate_path(model: LevyModel, horizon, dt, rng) -> PathGrid:
    n = _n_steps(horizon, dt)
    inc = sample_increments(model, dt, n, rng)
    return PathGrid(float(dt), float(horizon), np.concatenate([[0.0], np.cumsum(inc)]))


def simulate_paths(model: LevyModel, horizon, dt, n_paths, rng) -> np.ndarray:
    """``(n_paths, n_steps + 1)`` array of independent paths from one stream."""
    n = _n_steps(horizon, dt)
    inc = sample_increments(model, dt, (n_paths, n), rng)
    out = np.zeros((n_paths, n + 1))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


# ---------------------------------------------------------------------------
# Poisson particle field

@dataclass(frozen=True)
class ParticleField:
    window: tuple[float, float]
    x: np.ndarray
    z: np.ndarray

    @property
    def count(self):
        return self.x.size

    @property
    def particles(self):
        return list(zip(self.x.tolist(), self.z.tolist()))


def weight_intensity(params: ModelParams, L: SlowlyVarying | None = None):
    """``nu_{alpha,eps}(R) = 2 int_eps^inf z**(-1-alpha) L(z) dz``."""
    return 2 * PowerTailSampler(params.alpha, params.epsilon_cut, L).mass()


def sample_particle_field(params: ModelParams, L: SlowlyVarying | None, window, rng) -> ParticleField:
    lo, hi = map(float, window)
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValueError("window must be a finite interval")
    gen = as_generator(rng)
    tail = PowerTailSampler(params.alpha, params.epsilon_cut, L)
    m = 2 * tail.mass()
    if not np.isfinite(m):
        raise ValueError("weight intensity diverges")
    n = gen.poisson((hi - lo) * m)
    x = gen.uniform(lo, hi, n)
    z = tail.sample(n, gen) * np.where(gen.random(n) < 0.5, -1.0, 1.0)
    return ParticleField((lo, hi), x, z)
