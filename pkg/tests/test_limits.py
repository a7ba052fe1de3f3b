import math

import numpy as np
import pytest
from scipy import integrate

from hsssi.analysis import ecf
from hsssi.limits import (CfQuery, FieldPool, brownian_abs_moment, cf_first_order, cf_heavy,
                          cf_second_order, hat_weights, hat_weights_total, heavy_far_field,
                          kernel_Z, lattice_kernel, lepage_sample, limit_cf)
from hsssi.localtime import LocalTimeField
from hsssi.model import LimitSpec, ModelParams, hurst
from hsssi.sampling import RngSpec

TIMES = (0.5, 1.0)


@pytest.fixture(scope="module")
def pool():
    return FieldPool.build(1.5, [0.5, 1.0, 2.0], 1500, RngSpec(1), dt=1e-3, K=10.0, dx=0.05)


@pytest.fixture(scope="module")
def heavy_pool():
    return FieldPool.build(1.5, [0.5, 1.0], 400, RngSpec(2), dt=1e-3, K=10.0, dx=0.05, gamma=1.1,
                           variant="symmetric")


def test_cfquery_validation():
    with pytest.raises(ValueError):
        CfQuery([1.0], [1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        CfQuery([1.0], [1.0, 2.0], [1.0, 0.5])


def test_theta_zero_is_one(pool, heavy_pool):
    q = CfQuery([0.0], (1.0, -1.0), TIMES)
    assert cf_first_order(q, 1.5, 1.5, pool=pool).values[0] == 1.0
    assert cf_second_order(q, 1.5, 1.5, pool=pool).values[0] == 1.0
    assert cf_heavy(q, 1.5, 1.5, 1.1, pool=heavy_pool).values[0] == 1.0


def test_single_time_stable_marginal(pool):
    th = np.geomspace(0.1, 3, 8)
    r = cf_first_order(CfQuery(th, (1.0,), (1.0,)), 1.5, 1.5, pool=pool)
    slope = np.polyfit(np.log(th), np.log(-np.log(r.values.real)), 1)[0]
    assert slope == pytest.approx(1.5, abs=0.05)
    assert np.all(r.values.imag == 0)
    assert np.all((0 < r.values.real) & (r.values.real <= 1))


def test_cf_homogeneity_and_symmetry(pool):
    q = CfQuery([0.7], (1.0, -0.5), TIMES)
    a = cf_first_order(q, 1.5, 1.5, pool=pool).values[0]
    neg = cf_first_order(CfQuery([-0.7], (1.0, -0.5), TIMES), 1.5, 1.5, pool=pool).values[0]
    assert a == pytest.approx(neg, abs=1e-15)  # Hermitian and real
    b = cf_first_order(CfQuery([0.35], (2.0, -1.0), TIMES), 1.5, 1.5, pool=pool).values[0]
    assert a == pytest.approx(b, rel=1e-10)
    with pytest.raises(ValueError):
        cf_first_order(q, 1.5, 1.5, int_phi=0.0, pool=pool)


def test_first_order_self_similarity(pool):
    H = hurst(LimitSpec.first_order(ModelParams(1.5, 1.5)))
    th = np.geomspace(0.1, 1.5, 6)
    big = cf_first_order(CfQuery(th, (1.0, 1.0), (1.0, 2.0)), 1.5, 1.5, pool=pool)
    small = cf_first_order(CfQuery(2 ** H * th, (1.0, 1.0), (0.5, 1.0)), 1.5, 1.5, pool=pool)
    tol = 3 * np.sqrt(big.se ** 2 + small.se ** 2) + 0.01
    assert np.all(np.abs(big.values - small.values) <= tol)
    wrong = cf_first_order(CfQuery(2 ** (H + 0.1) * th, (1.0, 1.0), (0.5, 1.0)), 1.5, 1.5, pool=pool)
    assert np.any(np.abs(big.values - wrong.values) > tol)


def test_second_order_conditioning_identity(pool):
    # E|W_L|**a = m_a E[L**(a/2)] with m_a the Gaussian absolute moment
    q = CfQuery([1.0], (1.0,), (1.0,))
    r = cf_second_order(q, 1.5, 1.5, pool=pool)
    direct = brownian_abs_moment(1.5) * np.mean(pool.L[:, 1, :].astype(float) ** 0.75 @ pool.weights)
    assert r.exponent == pytest.approx(direct, rel=1e-10)
    assert brownian_abs_moment(2.0) == pytest.approx(1.0)
    assert brownian_abs_moment(1.0) == pytest.approx(math.sqrt(2 / math.pi))


def test_second_order_sampled_matches_conditional(pool):
    q = CfQuery(np.array([0.3, 0.8]), (1.0, -1.0), TIMES)
    a = cf_second_order(q, 1.5, 1.5, pool=pool)
    b = cf_second_order(q, 1.5, 1.5, pool=pool, method="sampled", rng=RngSpec(3))
    assert np.all(np.abs(a.values - b.values) <= 3 * np.sqrt(a.se ** 2 + b.se ** 2) + 5e-3)


def test_second_order_self_similarity(pool):
    H = hurst(LimitSpec.second_order(ModelParams(1.5, 1.5)))
    th = np.geomspace(0.2, 2.0, 5)
    big = cf_second_order(CfQuery(th, (1.0, 1.0), (1.0, 2.0)), 1.5, 1.5, pool=pool)
    small = cf_second_order(CfQuery(2 ** H * th, (1.0, 1.0), (0.5, 1.0)), 1.5, 1.5, pool=pool)
    assert np.all(np.abs(big.values - small.values) <= 3 * np.sqrt(big.se ** 2 + small.se ** 2) + 0.01)


def test_hat_weights_sum_to_total():
    g, b = 1.3, 0.1
    w = hat_weights(g, b, 200000)
    tail = b ** (1 - g) * 200000 ** (1 - g) / (g - 1)
    assert w.sum() + tail == pytest.approx(hat_weights_total(g, b), rel=1e-4)


def _field(fn, dx=0.01, K=8.0):
    xg = np.arange(-K, K + dx / 2, dx)
    return LocalTimeField(xg, np.array([1.0]), fn(xg)[None, :], dx)


def test_kernel_zero_and_symmetric_fields():
    f0 = _field(lambda x: np.zeros_like(x))
    assert kernel_Z(f0, 1.1, 0.3)[0] == 0.0
    fs = _field(lambda x: np.exp(-(x - 0.5) ** 2))
    assert kernel_Z(fs, 1.1, 0.5)[0] == pytest.approx(0.0, abs=1e-12)


def test_kernel_against_quadrature():
    fn = lambda x: np.exp(-x ** 2)  # noqa: E731
    f = _field(fn, dx=0.002)
    x, g = 0.4, 1.3
    d1 = -2 * x * fn(x)
    # divided differences are smooth, so the singular power goes in the algebraic weight
    qs = lambda y: (fn(x + y) - fn(x - y)) / y if y > 0 else 2 * d1  # noqa: E731
    qa = lambda y: (fn(x + y) - fn(x)) / y if y > 0 else d1  # noqa: E731
    sym = integrate.quad(qs, 0, 20, weight="alg", wvar=(1 - g, 0), limit=400)[0]
    asym = integrate.quad(qa, 0, 1, weight="alg", wvar=(1 - g, 0))[0] + \
        integrate.quad(lambda y: (fn(x + y) - fn(x)) * y ** -g, 1, np.inf)[0]
    assert kernel_Z(f, g, x)[0] == pytest.approx(sym, rel=2e-3)
    assert kernel_Z(f, g, x, "asymmetric")[0] == pytest.approx(asym, rel=2e-3)
    with pytest.raises(ValueError):
        kernel_Z(f, 2.5, x)


def test_lattice_kernel_matches_kernel_Z():
    f = _field(lambda x: np.exp(-x ** 2) * (1 + 0.3 * x), dx=0.01)
    lat = lattice_kernel(f.table[0], 1.2, f.dx)
    for k in (300, 800, 1000):
        assert lat[k] == pytest.approx(kernel_Z(f, 1.2, float(f.xgrid[k]))[0], rel=1e-9, abs=1e-12)


def test_heavy_far_field():
    q = CfQuery([1.0], (1.0, -1.0), TIMES)
    assert heavy_far_field(q, 1.5, 1.1, 10.0, "symmetric") == pytest.approx(
        0.5 ** 1.5 * 2 * 10 ** (1 - 1.65) / 0.65)
    with pytest.raises(ValueError):
        heavy_far_field(q, 0.8, 1.1, 10.0, "symmetric")


def test_heavy_kernel_profile_decays(heavy_pool):
    Z = np.abs(heavy_pool.Z[:, 1, :]).mean(axis=0)
    x = heavy_pool.xgrid
    inner = Z[np.abs(x) < 1].mean()
    outer = Z[np.abs(x) > 8].mean()
    assert np.isfinite(Z @ heavy_pool.weights)
    assert outer < 0.5 * inner
    # far field: Z_t(x) ~ -sign(x) t |x|**-gamma
    edge = heavy_pool.Z[:, 1, -1].astype(float).mean()
    assert edge == pytest.approx(-1.0 * 10 ** -1.1, rel=0.15)


def test_heavy_cf_requires_matching_pool(pool, heavy_pool):
    q = CfQuery([1.0], (1.0,), (1.0,))
    with pytest.raises(ValueError):
        cf_heavy(q, 1.5, 1.5, 1.1, pool=pool)
    with pytest.raises(ValueError):
        cf_heavy(q, 1.5, 1.5, 1.1, "asymmetric", pool=heavy_pool)


def test_limit_cf_dispatch(pool):
    spec = LimitSpec.first_order(ModelParams(1.5, 1.5))
    q = CfQuery([0.5], (1.0,), (1.0,))
    assert limit_cf(spec, q, pool, 2.0).values[0] == cf_first_order(q, 1.5, 1.5, 2.0, pool=pool).values[0]


def test_field_pool_thread_invariant():
    a = FieldPool.build(1.5, [1.0], 6, RngSpec(4), dt=1e-3, workers=1)
    b = FieldPool.build(1.5, [1.0], 6, RngSpec(4), dt=1e-3, workers=4)
    assert a.L.tobytes() == b.L.tobytes()
    with pytest.raises(ValueError):
        a.time_index([0.3])


def test_lepage_zero_kernel(pool):
    r = lepage_sample("zero", [1.0], 200, pool, RngSpec(5), n_samples=3)
    assert np.all(r.values == 0)
    with pytest.raises(ValueError):
        lepage_sample("zero", [1.0], 10, pool, RngSpec(5))


def test_lepage_matches_first_order_cf(pool):
    spec = LimitSpec.first_order(ModelParams(1.5, 1.5))
    r = lepage_sample(spec, TIMES, 2000, pool, RngSpec(6), n_samples=10000)
    th = np.array([0.1, 0.3, 0.6])
    rep = ecf(r.values, CfQuery(th, (1.0, 1.0), TIMES))
    ref = cf_first_order(CfQuery(th, (1.0, 1.0), TIMES), 1.5, 1.5, pool=pool)
    assert np.all(np.abs(rep.values - ref.values) <= 3 * np.sqrt(rep.se ** 2 + ref.se ** 2))
    # sign flip: the law is symmetric
    flip = ecf(-r.values, CfQuery(th, (1.0, 1.0), TIMES))
    assert np.all(np.abs(flip.values - rep.values) <= 2 * 3 * rep.se)


def test_cf_csv_roundtrip(pool):
    r = cf_first_order(CfQuery([0.0, 1.0], (1.0,), (1.0,)), 1.5, 1.5, pool=pool)
    lines = r.to_csv().splitlines()
    assert lines[0].startswith("# schema:")
    assert lines[2] == "0.0,1.0,0.0,0.0"
