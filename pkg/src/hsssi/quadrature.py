"""Thin wrappers around QUADPACK with explicit tolerance accounting."""
from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

ABS_TOL = 1e-10
REL_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Raised when an adaptive rule cannot reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DivergentIntegralError(QuadratureError):
    pass


def integrate_1d(f, a, b, *, epsabs=ABS_TOL, epsrel=REL_TOL, limit=500,
                 points=None, weight=None, wvar=None, strict=True):
    """Adaptive integral of ``f`` over ``[a, b]`` (either end may be infinite).

    Returns ``(value, error_estimate)``.  With ``strict`` a result whose error
    estimate exceeds ``max(epsabs, epsrel * |value|)`` by more than a factor
    of 100 raises :class:`QuadratureError`.  ``weight``/``wvar`` are passed
    to QUADPACK (e.g. ``weight="alg"`` for end-point power singularities).
    """
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=limit)
    if points is not None and np.isfinite(a) and np.isfinite(b):
        kw["points"] = points
    if weight is not None:
        kw.update(weight=weight, wvar=wvar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(f, a, b, **kw)
    _check(value, err, epsabs, epsrel, strict)
    return value, err


def integrate_fourier(f, a, omega, kind="cos", *, epsabs=ABS_TOL, limlst=200,
                      strict=True):
    """``int_a^inf f(u) cos(omega u) du`` (or ``sin``) via QAWF."""
    if omega == 0:
        if kind == "sin":
            return 0.0, 0.0
        return integrate_1d(f, a, np.inf, epsabs=epsabs, strict=strict)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(f, a, np.inf, weight=kind, wvar=abs(omega),
                                    epsabs=epsabs, limlst=limlst)
    if kind == "sin" and omega < 0:
        value = -value
    _check(value, err, epsabs, REL_TOL, strict)
    return value, err


def _check(value, err, epsabs, epsrel, strict):
    if not np.isfinite(value):
        raise DivergentIntegralError("integral diverges (non-finite value)")
    if strict and err > 100 * max(epsabs, epsrel * abs(value)):
        raise QuadratureError(
            f"quadrature did not converge: achieved abs error {err:.3g} "
            f"(requested {max(epsabs, epsrel * abs(value)):.3g})",
            achieved=err,
        )
