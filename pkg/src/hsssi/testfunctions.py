"""Test functions phi entering the occupation functionals.

Three closed families are supported: signed sums of interval indicators,
combinations of Gaussian bumps, and the heavy-tailed pair with power tails
``y**-gamma1`` on the right and ``-|y|**-gamma2`` on the left.  Every family
provides point values, the exact integral, the cumulative integral and the
Fourier transform ``phi_hat(w) = int exp(i w u) phi(u) du``.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .quadrature import integrate_fourier


class TestFunctionPhi(ABC):
    """Common interface of the test-function catalogue."""

    __test__ = False  # keep pytest from collecting the class

    kind: str = ""

    @abstractmethod
    def __call__(self, y): ...

    @property
    @abstractmethod
    def integral(self) -> float: ...

    @abstractmethod
    def antiderivative(self, y):
        """``int_{-inf}^{y} phi``."""

    @abstractmethod
    def fourier(self, w): ...

    @abstractmethod
    def scaled(self, lam: float) -> "TestFunctionPhi": ...

    @property
    def support(self) -> tuple[float, float] | None:
        """Bounded interval containing the support, ``None`` for heavy tails."""
        return None

    @property
    def tail_exponents(self) -> tuple[float, float] | None:
        return None

    @property
    def moment_exponent_sup(self) -> float:
        """Supremum of ``kappa`` with ``int |phi(y)| |y|**kappa dy < inf``."""
        return np.inf


@dataclass(frozen=True)
class IntervalCombination(TestFunctionPhi):
    """``sum_i c_i 1_{(a_i, b_i]}``; ``pieces`` holds ``(a, b, c)`` triples."""

    pieces: tuple[tuple[float, float, float], ...]
    kind = "indicator-combination"

    def __post_init__(self):
        pieces = tuple((float(a), float(b), float(c)) for a, b, c in self.pieces)
        if not pieces:
            raise ValueError("need at least one interval")
        if any(b <= a for a, b, _ in pieces):
            raise ValueError("intervals must satisfy a < b")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def indicator(cls, a=0.0, b=1.0, c=1.0):
        return cls(((a, b, c),))

    @classmethod
    def haar(cls):
        """``1_{(0,1]} - 1_{(-1,0]}``."""
        return cls(((0.0, 1.0, 1.0), (-1.0, 0.0, -1.0)))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for a, b, c in self.pieces:
            out += c * ((y > a) & (y <= b))
        return out

    @property
    def integral(self):
        return float(sum(c * (b - a) for a, b, c in self.pieces))

    def antiderivative(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for a, b, c in self.pieces:
            out += c * np.clip(y - a, 0.0, b - a)
        return out

    def fourier(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape, dtype=complex)
        small = np.abs(w) < 1e-8
        ws = np.where(small, 1.0, w)
        for a, b, c in self.pieces:
            val = (np.exp(1j * b * ws) - np.exp(1j * a * ws)) / (1j * ws)
            out += c * np.where(small, (b - a) + 0.5j * (b * b - a * a) * w, val)
        return out

    def scaled(self, lam):
        return IntervalCombination(tuple((a, b, lam * c) for a, b, c in self.pieces))

    @property
    def support(self):
        return (min(a for a, _, _ in self.pieces), max(b for _, b, _ in self.pieces))


@dataclass(frozen=True)
class GaussianBumps(TestFunctionPhi):
    """``sum_i c_i N(y; m_i, s_i**2)``; ``components`` holds ``(c, m, s)``."""

    components: tuple[tuple[float, float, float], ...]
    kind = "gaussian-bumps"

    def __post_init__(self):
        comps = tuple((float(c), float(m), float(s)) for c, m, s in self.components)
        if not comps or any(s <= 0 for _, _, s in comps):
            raise ValueError("need components with positive widths")
        object.__setattr__(self, "components", comps)

    @classmethod
    def difference(cls, s1=1.0, s2=2.0):
        """Zero-integral difference of two centred Gaussian densities."""
        return cls(((1.0, 0.0, s1), (-1.0, 0.0, s2)))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for c, m, s in self.components:
            out += c * np.exp(-0.5 * ((y - m) / s) ** 2) / (s * np.sqrt(2 * np.pi))
        return out

    @property
    def integral(self):
        return float(sum(c for c, _, _ in self.components))

    def antiderivative(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for c, m, s in self.components:
            out += c * special.ndtr((y - m) / s)
        return out

    def fourier(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape, dtype=complex)
        for c, m, s in self.components:
            out += c * np.exp(1j * m * w - 0.5 * (s * w) ** 2)
        return out

    def scaled(self, lam):
        return GaussianBumps(tuple((lam * c, m, s) for c, m, s in self.components))

    @property
    def support(self):
        # 9 standard deviations: the neglected mass is below 1e-18
        return (min(m - 9 * s for _, m, s in self.components),
                max(m + 9 * s for _, m, s in self.components))


@dataclass(frozen=True)
class HeavyTailPair(TestFunctionPhi):
    """Zero-integral function with power tails.

    ``phi(y) = amp1 * y**-gamma1`` for ``y > 1`` and ``-amp2 * |y|**-gamma2``
    for ``y < -1``.  On ``(0, 1]`` it equals ``amp1`` and on ``(-1, 0]`` it
    equals ``-core_left`` where ``core_left`` is fixed by ``int phi = 0``.
    The slowly varying factors of the tails are the constants ``amp1`` and
    ``amp2``.
    """

    gamma1: float
    gamma2: float
    amp1: float = 1.0
    amp2: float = 1.0
    kind = "heavy-tail-pair"

    def __post_init__(self):
        if self.gamma1 <= 1 or self.gamma2 <= 1:
            raise ValueError("tail exponents must exceed 1 for integrability")

    @classmethod
    def symmetric(cls, gamma, amp=1.0):
        return cls(gamma, gamma, amp, amp)

    @property
    def tail_mass(self):
        return self.amp1 / (self.gamma1 - 1), self.amp2 / (self.gamma2 - 1)

    @property
    def core_left(self):
        right, left = self.tail_mass
        return self.amp1 + right - left

    def tail(self, y):
        """Tail part only (zero on ``[-1, 1]``)."""
        y = np.asarray(y, dtype=float)
        ay = np.maximum(np.abs(y), 1.0)
        return np.where(y > 1, self.amp1 * ay ** -self.gamma1,
                        np.where(y < -1, -self.amp2 * ay ** -self.gamma2, 0.0))

    def core(self) -> IntervalCombination:
        return IntervalCombination(((0.0, 1.0, self.amp1), (-1.0, 0.0, -self.core_left)))

    def __call__(self, y):
        return self.core()(y) + self.tail(y)

    @property
    def integral(self):
        return 0.0

    def tail_antiderivative(self, y):
        y = np.asarray(y, dtype=float)
        right, left = self.tail_mass
        ay = np.maximum(np.abs(y), 1.0)
        return np.where(
            y <= -1, -self.amp2 * ay ** (1 - self.gamma2) / (self.gamma2 - 1),
            np.where(y <= 1, -left,
                     -left + self.amp1 * (1 - ay ** (1 - self.gamma1)) / (self.gamma1 - 1)))

    def antiderivative(self, y):
        return self.core().antiderivative(y) + self.tail_antiderivative(y)

    def fourier(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        out = self.core().fourier(w)
        for k, wk in enumerate(w):
            c1 = integrate_fourier(lambda u: u ** -self.gamma1, 1.0, wk, "cos", strict=False)[0]
            s1 = integrate_fourier(lambda u: u ** -self.gamma1, 1.0, wk, "sin", strict=False)[0]
            c2 = integrate_fourier(lambda u: u ** -self.gamma2, 1.0, wk, "cos", strict=False)[0]
            s2 = integrate_fourier(lambda u: u ** -self.gamma2, 1.0, wk, "sin", strict=False)[0]
            out[k] += self.amp1 * (c1 + 1j * s1) - self.amp2 * (c2 - 1j * s2)
        return out

    def scaled(self, lam):
        if lam <= 0:
            raise ValueError("heavy-tail pairs scale by positive factors only")
        return replace(self, amp1=lam * self.amp1, amp2=lam * self.amp2)

    @property
    def tail_exponents(self):
        return (self.gamma1, self.gamma2)

    @property
    def moment_exponent_sup(self):
        return min(self.gamma1, self.gamma2) - 1.0
