"""Model parameters, Levy exponents, normalizations and limit-family metadata.

The motion of every particle is a symmetric Levy process with Levy measure
``nu(dx) = c(beta)**-1 f(|x|) |x|**(-1-beta) dx`` where ``f`` is slowly
varying.  With ``f == 1`` the motion is the standard symmetric beta-stable
Levy process, ``psi(z) = |z|**beta``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from .quadrature import (ABS_TOL, REL_TOL, DivergentIntegralError, integrate_1d,
                         integrate_fourier)
from .testfunctions import HeavyTailPair, TestFunctionPhi

E = math.e


# ---------------------------------------------------------------------------
# stable constant c(a) = int (1 - cos u) |u|**(-1-a) du

def stable_constant_closed(a: float) -> float:
    """Closed form ``pi / (Gamma(1+a) sin(pi a / 2))``."""
    return math.pi / (math.gamma(1.0 + a) * math.sin(math.pi * a / 2.0))


@lru_cache(maxsize=64)
def stable_constant(a: float) -> float:
    """``int_R (1 - cos u) |u|**(-1-a) du`` by quadrature, ``0 < a < 2``.

    This is the constant making ``c(a)**-1 |x|**(-1-a) dx`` the Levy measure
    of the standard symmetric a-stable law, and the constant in the
    characteristic function of stable integrals.
    """
    if not 0 < a < 2:
        raise ValueError("stable index must lie in (0, 2)")
    return 2.0 * _one_minus_cos_integral(lambda v: np.ones_like(v), a)


def _sinc_half_sq(v):
    # 2 sin(v/2)**2 / v**2, smooth at 0
    return 0.5 * np.sinc(v / (2 * np.pi)) ** 2


def _one_minus_cos_integral(weight, beta, epsrel=REL_TOL):
    """``int_0^inf (1 - cos v) weight(v) v**(-1-beta) dv`` for slowly varying weight."""
    head = integrate_1d(lambda v: _sinc_half_sq(v) * weight(v), 0.0, 1.0,
                        weight="alg", wvar=(1.0 - beta, 0.0), epsrel=epsrel)[0]
    plain = integrate_1d(lambda v: weight(v) * v ** (-1.0 - beta), 1.0, np.inf,
                         epsrel=epsrel)[0]
    osc = integrate_fourier(lambda v: weight(v) * v ** (-1.0 - beta), 1.0, 1.0, "cos")[0]
    return head + plain - osc


# ---------------------------------------------------------------------------
# slowly varying presets

_PRESETS = ("constant", "log", "iterated_log")


@dataclass(frozen=True)
class SlowlyVarying:
    """Closed catalogue of slowly varying functions, extended evenly to ``R``.

    ``constant``: ``c``; ``log``: ``log(e + |u|)``; ``iterated_log``:
    ``log(e + log(e + |u|))``.  Arbitrary callables are not accepted since
    the regularity required of ``f`` cannot be checked for black boxes.
    """

    preset: str = "constant"
    c: float = 1.0

    def __post_init__(self):
        if self.preset not in _PRESETS:
            raise ValueError(f"unknown slowly varying preset {self.preset!r}; "
                             f"choose from {_PRESETS}")
        if self.preset == "constant" and not self.c > 0:
            raise ValueError("constant preset must be positive")

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", float(c))

    @classmethod
    def log(cls):
        return cls("log")

    @classmethod
    def iterated_log(cls):
        return cls("iterated_log")

    @property
    def is_constant(self):
        return self.preset == "constant"

    def __call__(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        if self.preset == "constant":
            return np.full_like(u, self.c)
        if self.preset == "log":
            return np.log(E + u)
        return np.log(E + np.log(E + u))

    def ratio_ladder(self, lam=2.0, us=(1e2, 1e4, 1e8, 1e16, 1e32)):
        """``f(lam u) / f(u)`` along a ladder of ``u``; tends to 1."""
        us = np.asarray(us, dtype=float)
        return self(lam * us) / self(us)

    def to_dict(self):
        return {"preset": self.preset, "c": self.c} if self.is_constant else {"preset": self.preset}

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("preset", "constant"), float(d.get("c", 1.0)))


# ---------------------------------------------------------------------------
# parameters and the Levy model

@dataclass(frozen=True)
class ModelParams:
    alpha: float
    beta: float
    epsilon_cut: float = 1.0
    kappa_c: float | None = None
    kappa_d: float | None = None

    def range_violations(self):
        out = []
        if not 1 < self.beta < 2:
            out.append(f"(A) beta={self.beta} outside (1,2)")
        if not 1 < self.alpha < 2:
            out.append(f"(B) alpha={self.alpha} outside (1,2)")
        if not self.epsilon_cut > 0:
            out.append(f"(B) epsilon_cut={self.epsilon_cut} must be positive")
        if self.kappa_c is not None and not 0 < self.kappa_c < 1:
            out.append(f"(C) kappa={self.kappa_c} outside (0,1)")
        if self.kappa_d is not None and not self.kappa_d > (self.beta - 1) / 2:
            out.append(f"(D) kappa={self.kappa_d} must exceed (beta-1)/2="
                       f"{(self.beta - 1) / 2:g}")
        return out

    def check(self):
        bad = self.range_violations()
        if bad:
            raise ValueError("; ".join(bad))
        return self


@dataclass(frozen=True)
class LevyModel:
    """Symmetric Levy motion: pure beta-stable (``f is None``) or rv-density."""

    beta: float
    f: SlowlyVarying | None = None

    def __post_init__(self):
        if not 1 < self.beta < 2:
            raise ValueError(f"(A) beta={self.beta} outside (1,2)")
        if self.f is not None and self.f.is_constant and self.f.c == 1.0:
            object.__setattr__(self, "f", None)

    @classmethod
    def pure_stable(cls, beta):
        return cls(float(beta))

    @classmethod
    def rv_density(cls, beta, f: SlowlyVarying):
        return cls(float(beta), f)

    @property
    def kind(self):
        return "pure-stable" if self.f is None else "rv-density"

    @property
    def slowly_varying(self) -> SlowlyVarying:
        return self.f if self.f is not None else SlowlyVarying.constant(1.0)

    @property
    def c_beta(self):
        return stable_constant(self.beta)

    def levy_density(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return self.slowly_varying(x) * x ** (-1.0 - self.beta) / self.c_beta

    def _scaled_integral(self, scale, norm):
        f = self.slowly_varying
        return _one_minus_cos_integral(lambda v: f(scale * v) / norm, self.beta)

    def psi(self, z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        if self.f is None:
            return az ** self.beta
        out = np.zeros_like(az)
        flat = out.reshape(-1)
        for k, zk in enumerate(az.reshape(-1)):
            if zk > 0:
                flat[k] = 2 * zk ** self.beta / self.c_beta * self._scaled_integral(1.0 / zk, 1.0)
        return out

    def psi_scaled(self, T, z):
        """``T f(T**(1/beta))**-1 psi(z / T**(1/beta))``."""
        if T < 1:
            raise ValueError("T must be >= 1")
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        if self.f is None:
            return az ** self.beta
        s = T ** (1.0 / self.beta)
        fs = float(self.f(s))
        out = np.zeros_like(az)
        flat = out.reshape(-1)
        for k, zk in enumerate(az.reshape(-1)):
            if zk > 0:
                flat[k] = 2 * zk ** self.beta / self.c_beta * self._scaled_integral(s / zk, fs)
        return out

    def jump_rate(self, delta):
        """Total mass of the Levy measure on ``|x| > delta``."""
        f = self.slowly_varying
        if self.f is None:
            return 2 * delta ** (-self.beta) / (self.beta * self.c_beta)
        val = integrate_1d(lambda x: f(x) * x ** (-1.0 - self.beta), delta, np.inf,
                           epsabs=0.0)[0]
        return 2 * val / self.c_beta

    def small_jump_variance(self, delta):
        """``int_{|x| <= delta} x**2 nu(dx)``."""
        f = self.slowly_varying
        b = self.beta
        val = integrate_1d(lambda x: f(x), 0.0, delta, weight="alg", wvar=(1.0 - b, 0.0),
                           epsabs=0.0)[0]
        return 2 * val / self.c_beta

    def to_dict(self):
        d = {"beta": self.beta, "kind": self.kind}
        if self.f is not None:
            d["f"] = self.f.to_dict()
        return d


def psi(model: LevyModel, z):
    return model.psi(z)


def psi_scaled(model: LevyModel, T, z):
    return model.psi_scaled(T, z)


# ---------------------------------------------------------------------------
# limit families

class Family(str, enum.Enum):
    FIRST_ORDER = "first-order"
    SECOND_ORDER = "second-order"
    HEAVY_SYMMETRIC = "heavy-symmetric"
    HEAVY_ASYMMETRIC = "heavy-asymmetric"

    @property
    def is_heavy(self):
        return self in (Family.HEAVY_SYMMETRIC, Family.HEAVY_ASYMMETRIC)


@dataclass(frozen=True)
class LimitSpec:
    family: Family
    params: ModelParams
    gamma1: float | None = None
    gamma2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.HEAVY_SYMMETRIC:
            if self.gamma1 is None:
                raise ValueError("heavy-symmetric family needs gamma")
            if self.gamma2 is None:
                object.__setattr__(self, "gamma2", self.gamma1)
        if self.family is Family.HEAVY_ASYMMETRIC and (self.gamma1 is None or self.gamma2 is None):
            raise ValueError("heavy-asymmetric family needs gamma1 and gamma2")

    @classmethod
    def first_order(cls, params):
        return cls(Family.FIRST_ORDER, params)

    @classmethod
    def second_order(cls, params):
        return cls(Family.SECOND_ORDER, params)

    @classmethod
    def heavy(cls, params, gamma1, gamma2=None):
        if gamma2 is None or gamma2 == gamma1:
            return cls(Family.HEAVY_SYMMETRIC, params, gamma1, gamma1)
        return cls(Family.HEAVY_ASYMMETRIC, params, gamma1, gamma2)

    @property
    def gamma(self):
        """Effective tail exponent ``min(gamma1, gamma2)``."""
        if not self.family.is_heavy:
            return None
        return min(self.gamma1, self.gamma2)

    @property
    def hurst(self):
        return hurst(self)

    def violations(self):
        out = self.params.range_violations()
        if self.family.is_heavy:
            b = self.params.beta
            if min(self.gamma1, self.gamma2) <= 1:
                out.append("(heavy-tail hypothesis) tail exponents must exceed 1")
            upper = 1 + (b - 1) / 2
            if not self.gamma < upper:
                out.append(f"(heavy-tail hypothesis) min(gamma1,gamma2)={self.gamma:g} must be below "
                           f"1+(beta-1)/2={upper:g}")
            if self.family is Family.HEAVY_ASYMMETRIC and not self.gamma1 < self.gamma2:
                out.append("(heavy-tail hypothesis) asymmetric case expects gamma1 < gamma2 "
                           "(reflect phi otherwise)")
        return out

    def to_dict(self):
        d = {"family": self.family.value, "alpha": self.params.alpha,
             "beta": self.params.beta, "epsilon_cut": self.params.epsilon_cut}
        if self.family.is_heavy:
            d.update(gamma1=self.gamma1, gamma2=self.gamma2)
        return d


def hurst(spec: LimitSpec) -> float:
    a, b = spec.params.alpha, spec.params.beta
    if spec.family is Family.FIRST_ORDER:
        return 1 - 1 / b + 1 / (a * b)
    if spec.family is Family.SECOND_ORDER:
        bt = 1 - 1 / b
        return bt / 2 + (1 - bt) / a
    return 1 + 1 / (a * b) - spec.gamma / b


# ---------------------------------------------------------------------------
# validation

def validate(params: ModelParams, phi: TestFunctionPhi | None = None, family=None):
    """Return the list of violated hypotheses (empty means valid).

    ``family`` may be a :class:`Family` or a :class:`LimitSpec`; for heavy
    families without a spec the tail exponents are read from ``phi``.
    """
    spec = family if isinstance(family, LimitSpec) else None
    fam = spec.family if spec is not None else (Family(family) if family is not None else None)
    out = list(params.range_violations())
    b = params.beta
    if fam is not None and fam.is_heavy:
        if spec is None:
            if phi is None or phi.tail_exponents is None:
                out.append("(heavy-tail hypothesis) heavy-tail family needs a phi with power tails")
                return out
            g1, g2 = phi.tail_exponents
            spec = LimitSpec.heavy(params, g1, g2) if fam is Family.HEAVY_ASYMMETRIC or g1 != g2 \
                else LimitSpec(fam, params, g1, g2)
            if spec.family is not fam:
                out.append(f"(heavy-tail hypothesis) phi tails ({g1:g},{g2:g}) do not match family {fam.value}")
        out.extend(v for v in spec.violations() if v not in out)
        if phi is not None and phi.tail_exponents is not None:
            if tuple(phi.tail_exponents) != (spec.gamma1, spec.gamma2):
                out.append("(heavy-tail hypothesis) phi tail exponents differ from the family's gammas")
            if fam is Family.HEAVY_SYMMETRIC and isinstance(phi, HeavyTailPair) \
                    and phi.amp1 != phi.amp2:
                out.append("(heavy-tail hypothesis) symmetric case needs f1(T)/f2(T) -> 1")
    if phi is None or fam is None:
        return out
    I = phi.integral
    if fam is Family.FIRST_ORDER and abs(I) < 1e-12:
        out.append("(first-order hypothesis) int phi = 0: first-order limit is degenerate")
    if fam is not Family.FIRST_ORDER and abs(I) > 1e-12:
        out.append(f"(zero-integral hypothesis) int phi = {I:g} must vanish")
    if fam is Family.SECOND_ORDER and not phi.moment_exponent_sup > (b - 1) / 2:
        out.append("(D) int |phi(y)| |y|**((beta-1)/2) dy diverges: tails too heavy")
    return out


# ---------------------------------------------------------------------------
# normalizations

@dataclass(frozen=True)
class Normalization:
    scale: float
    C_T: float
    D_T: float


def normalization(spec: LimitSpec | Family, T, params: ModelParams | None = None,
                  f: SlowlyVarying | None = None, g1: SlowlyVarying | None = None,
                  L: SlowlyVarying | None = None, gamma: float | None = None) -> Normalization:
    """``(scale, C_T, D_T)`` of the particle functional for a family at ``T``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if isinstance(spec, LimitSpec):
        fam, params, gamma = spec.family, spec.params, spec.gamma
    else:
        fam = Family(spec)
    a, b = params.alpha, params.beta
    f = f or SlowlyVarying.constant(1.0)
    L = L or SlowlyVarying.constant(1.0)
    g1 = g1 or SlowlyVarying.constant(1.0)
    s = T ** (1 / b)
    if fam is Family.FIRST_ORDER:
        fs = float(f(s))
        return Normalization(T ** (1 - 1 / b + 1 / (a * b)) / fs,
                             float(L(T ** (1 / (a * b)))), T / fs)
    if fam is Family.SECOND_ORDER:
        return Normalization(T ** ((b - 1) / (2 * b) + 1 / (a * b)), 1.0, float(T))
    if gamma is None:
        raise ValueError("heavy families need gamma")
    return Normalization(float(g1(s)) * T ** (1 + 1 / (a * b) - gamma / b), 1.0, float(T))


# ---------------------------------------------------------------------------
# the Rosen constant c(phi)

C_PHI_CONVENTIONS = ("prop2", "variance", "proof")


def c_phi_squared_integral(phi: TestFunctionPhi, model: LevyModel, partition="geometric",
                           wmax=512.0):
    """``int_R |phi_hat(w)|**2 / psi(w) dw`` on one of two partitions."""
    b = model.beta
    if abs(phi.integral) > 1e-12:
        raise ValueError("c(phi) needs int phi = 0")
    if not phi.moment_exponent_sup > (b - 1) / 2:
        raise DivergentIntegralError(
            "integral diverges: phi violates the integrability needed "
            "(tails heavier than |y|**(-1-(beta-1)/2))")

    def g(w):
        w = np.atleast_1d(w)
        return float(np.abs(phi.fourier(w)[0]) ** 2 / model.psi(w)[0])

    if partition == "geometric":
        edges = np.concatenate([[0.0], 2.0 ** np.arange(-3, int(np.log2(wmax)) + 1)])
    elif partition == "linear":
        edges = np.append(np.arange(0.0, wmax, 2.9), wmax)
    else:
        raise ValueError("partition must be 'geometric' or 'linear'")
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate_1d(g, lo, hi, epsabs=ABS_TOL * 1e-2, epsrel=1e-10, strict=False)[0]
    total += integrate_1d(g, edges[-1], np.inf, epsabs=1e-12, strict=False)[0]
    return 2.0 * total


def c_phi(phi: TestFunctionPhi, model: LevyModel, convention="prop2", check=False):
    """Scale of the Brownian limit of the normalized occupation time of ``phi``.

    With ``I = int |phi_hat|**2 / psi``:

    * ``"prop2"`` (default): ``sqrt(I) / pi``, the constant as stated;
    * ``"variance"``: ``sqrt(I / pi)``, the value matching the second
      moment of the normalized functional (selected by the Rosen test);
    * ``"proof"``: ``sqrt(I)``.

    With ``check`` the integral is recomputed on a second partition and a
    relative disagreement above 1e-6 raises.
    """
    if convention not in C_PHI_CONVENTIONS:
        raise ValueError(f"convention must be one of {C_PHI_CONVENTIONS}")
    I = c_phi_squared_integral(phi, model, "geometric")
    if check:
        I2 = c_phi_squared_integral(phi, model, "linear")
        if abs(I - I2) > 1e-6 * abs(I):
            raise RuntimeError(f"c(phi)**2 partitions disagree: {I!r} vs {I2!r}")
    if convention == "variance":
        return math.sqrt(I / math.pi)
    if convention == "prop2":
        return math.sqrt(I) / math.pi
    return math.sqrt(I)


def c_phi_proof(phi, model):
    return c_phi(phi, model, "proof")


# ---------------------------------------------------------------------------
# tail integral asymptotics

def rv_tail_integral_check(beta, w, sv: SlowlyVarying | None = None):
    """``(int_w^1 dz / h(z)) / (w / h(w))`` with ``h(z) = z**beta * sv(1/z)``.

    Tends to ``1/(beta-1)`` as ``w -> 0``.
    """
    if not 0 < w < 1:
        raise ValueError("w must lie in (0,1)")
    sv = sv or SlowlyVarying.constant(1.0)
    if sv.is_constant:
        return (1 - w ** (beta - 1)) / (beta - 1)
    # z = exp(-s): dz / h(z) = exp(s (beta-1)) / sv(exp(s)) ds
    smax = -math.log(w)
    num = integrate_1d(lambda s: math.exp((beta - 1) * (s - smax)) / float(sv(math.exp(s))),
                       0.0, smax)[0]
    # the factor exp((beta-1) smax) = w**(1-beta) cancels against w / h(w)
    return num * float(sv(1 / w))


__all__ = [
    "Family", "LevyModel", "LimitSpec", "ModelParams", "Normalization", "SlowlyVarying",
    "c_phi", "c_phi_proof", "c_phi_squared_integral", "hurst", "normalization", "psi",
    "psi_scaled", "rv_tail_integral_check", "stable_constant", "stable_constant_closed",
    "validate",
]
