import math

import numpy as np
import pytest

from hsssi.quadrature import QuadratureError, integrate_1d, integrate_fourier


def test_integrate_1d_finite_and_infinite():
    assert integrate_1d(np.exp, 0.0, 1.0)[0] == pytest.approx(math.e - 1, rel=1e-12)
    assert integrate_1d(lambda x: math.exp(-x * x), -np.inf, np.inf)[0] == pytest.approx(math.sqrt(math.pi))


def test_integrate_1d_algebraic_weight():
    # int_0^1 x**-0.5 dx = 2
    assert integrate_1d(lambda x: 1.0, 0.0, 1.0, weight="alg", wvar=(-0.5, 0.0))[0] == pytest.approx(2.0)


def test_integrate_1d_strict_raises():
    with pytest.raises(QuadratureError):
        integrate_1d(lambda x: 1 / x, 0.0, 1.0, limit=5)
    val, err = integrate_1d(lambda x: 1 / x, 0.0, 1.0, limit=5, strict=False)
    assert np.isfinite(val)


def test_integrate_fourier_cos_sin():
    # int_0^inf exp(-x) cos(2x) dx = 1/5, sin: 2/5
    assert integrate_fourier(lambda x: math.exp(-x), 0.0, 2.0, "cos")[0] == pytest.approx(0.2, abs=1e-10)
    assert integrate_fourier(lambda x: math.exp(-x), 0.0, 2.0, "sin")[0] == pytest.approx(0.4, abs=1e-10)
    assert integrate_fourier(lambda x: math.exp(-x), 0.0, -2.0, "sin")[0] == pytest.approx(-0.4, abs=1e-10)
    assert integrate_fourier(lambda x: math.exp(-x), 0.0, 0.0, "sin")[0] == 0.0
