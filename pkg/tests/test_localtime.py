import math

import numpy as np
import pytest
from scipy import stats

from hsssi.experiments import local_time_at_zero
from hsssi.localtime import (estimate_local_time, field_integral, local_time_moment_exact,
                             local_time_moment_quadrature, mean_local_time, occupation_integral,
                             p1_zero, stable_density)
from hsssi.model import LevyModel
from hsssi.sampling import RngSpec, simulate_path
from hsssi.testfunctions import IntervalCombination

# mpmath oracle: (1/pi) int_0^inf cos(0.7 z) (1 - exp(-z**1.5)) / z**1.5 dz
EL1_AT_07 = 0.24409526239886260
# mpmath oracle: (1/2h) int_{-h}^{h} E L_1(y) dy at h = 0.05, beta = 1.5
EL1_BOX_005 = 0.74320505286898909


def test_p1_zero_closed_form():
    assert p1_zero(1.5) == pytest.approx(math.gamma(5 / 3) / math.pi, rel=1e-14)
    assert float(stable_density(1.5, 0.0)) == pytest.approx(p1_zero(1.5), rel=1e-9)


def test_stable_density_against_scipy():
    ys = np.array([0.0, 0.3, 1.0, 2.5, 7.0, 40.0])
    for b in (1.3, 1.5, 1.8):
        ref = stats.levy_stable.pdf(ys, b, 0.0)
        assert np.allclose(stable_density(b, ys), ref, rtol=1e-5, atol=1e-10)


def test_stable_density_scaling():
    y, u = 0.8, 3.0
    assert float(stable_density(1.5, y, u)) == pytest.approx(
        u ** (-1 / 1.5) * float(stable_density(1.5, y * u ** (-1 / 1.5))), rel=1e-12)


def test_first_moment_closed_form():
    assert local_time_moment_exact(1.5, 1.0, 0.0, 1) == pytest.approx(3 * math.gamma(5 / 3) / math.pi,
                                                                      rel=1e-12)
    assert local_time_moment_exact(1.5, 1.0, 0.0, 1) == pytest.approx(0.86206, abs=1e-5)


def test_first_moment_against_direct_quadrature():
    for b in (1.3, 1.5, 1.8):
        assert local_time_moment_exact(b, 1.0, 0.0, 1) == pytest.approx(
            local_time_moment_quadrature(b, 1.0, 0.0, 1), rel=1e-6)


def test_second_moment_against_double_quadrature():
    exact = local_time_moment_exact(1.5, 1.0, 0.0, 2)
    assert exact == pytest.approx(1.31287, abs=1e-5)
    assert exact == pytest.approx(local_time_moment_quadrature(1.5, 1.0, 0.0, 2), rel=1e-4)


def test_first_moment_off_origin_oracle():
    assert local_time_moment_exact(1.5, 1.0, 0.7, 1) == pytest.approx(EL1_AT_07, rel=1e-7)
    assert mean_local_time(1.5, 1.0, [0.7, -0.7]) == pytest.approx([EL1_AT_07, EL1_AT_07], rel=1e-7)


def test_moment_scaling_law():
    b = 1.5
    for n in (1, 2, 3):
        for c in (2.0, 4.0):
            assert local_time_moment_exact(b, c, 0.0, n) == pytest.approx(
                c ** (n * (1 - 1 / b)) * local_time_moment_exact(b, 1.0, 0.0, n), rel=1e-12)


def test_moment_order_range():
    with pytest.raises(ValueError):
        local_time_moment_exact(1.5, 1.0, 0.0, 5)
    assert local_time_moment_exact(1.5, 0.0, 0.0, 2) == 0.0


def _path(seed=0, dt=1e-3):
    return simulate_path(LevyModel.pure_stable(1.5), 1.0, dt, RngSpec(seed))


def test_zero_time_field_is_zero():
    f = estimate_local_time(_path(), np.linspace(-3, 3, 61), times=[0.0, 1.0])
    assert np.all(f.at(0.0) == 0)


def test_total_mass_identity():
    p = _path(1)
    dx = 0.01
    lo, hi = p.values.min() - 1, p.values.max() + 1
    xg = np.arange(lo, hi, dx)
    f = estimate_local_time(p, xg, bandwidth=dx / 2, times=[0.5, 1.0])
    assert np.allclose(f.mass(), [0.5, 1.0], atol=p.dt)


def test_occupation_integral_full_range():
    p = _path(2)
    phi = IntervalCombination.indicator(p.values.min() - 1, p.values.max() + 1)
    assert occupation_integral(p, phi, 1.0) == pytest.approx(1.0)
    assert occupation_integral(p, IntervalCombination.indicator(0, 1, 0.0), 1.0) == 0.0


def test_occupation_integral_matches_field():
    p = _path(3, dt=1e-4)
    dx, h = 0.002, 0.004
    xg = np.arange(p.values.min() - 2, p.values.max() + 2, dx)
    phi = IntervalCombination([(-0.5, 0.0, 1.0), (0.0, 0.7, -2.0)])
    f = estimate_local_time(p, xg, bandwidth=h)
    # the kernel smears each jump edge of phi over 2h; total variation of phi is 6
    assert float(field_integral(f, phi)[0]) == pytest.approx(occupation_integral(p, phi, 1.0),
                                                          abs=6 * (h + dx) * 2)


@pytest.fixture(scope="module")
def box_estimates_h005():
    return local_time_at_zero(1.5, [1.0], 20000, 1e-4, RngSpec(5, 1), bandwidth=0.05)[:, 0]


def test_mc_mean_local_time_at_zero(box_estimates_h005):
    # the box kernel at h = 0.05 averages E L_1 over [-h, h]; expected to miss (0.743 vs 0.862)
    assert box_estimates_h005.mean() == pytest.approx(3 * math.gamma(5 / 3) / math.pi, rel=0.03)


def test_mc_mean_box_estimator_smoothed_oracle(box_estimates_h005):
    x = box_estimates_h005
    assert abs(x.mean() - EL1_BOX_005) <= 3 * x.std(ddof=1) / math.sqrt(x.size) + 0.01 * EL1_BOX_005
