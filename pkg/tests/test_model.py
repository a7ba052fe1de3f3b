import math

import numpy as np
import pytest
from scipy import special

from hsssi.model import (Family, LevyModel, LimitSpec, ModelParams, SlowlyVarying, c_phi,
                         c_phi_squared_integral, hurst, normalization, rv_tail_integral_check,
                         stable_constant, stable_constant_closed, validate)
from hsssi.quadrature import DivergentIntegralError
from hsssi.testfunctions import HeavyTailPair, IntervalCombination

# Frozen oracle values (mpmath, 25 digits, computed independently of the package).
PSI_LOG_Z1 = 1.3263853225095155      # psi(1), log preset, beta = 1.5
PSI_T_LOG_1E8_Z1 = 0.9298903193238853  # psi_T(1), log preset, beta = 1.5, T = 1e8


def haar_integral_closed(beta):
    """``int |phi_hat|^2 |w|^-beta`` for the Haar function by Mellin continuation."""
    return 4 * math.pi * (2 - 2 ** beta) / (math.gamma(2 + beta) * math.cos(math.pi * beta / 2))


# --- validation ------------------------------------------------------------

def test_validate_ok():
    assert validate(ModelParams(1.5, 1.5), IntervalCombination.indicator(0, 1), Family.FIRST_ORDER) == []


def test_validate_beta_out_of_range():
    v = validate(ModelParams(1.5, 2.2))
    assert any("beta=2.2 outside (1,2)" in s for s in v)


def test_validate_heavy_gamma_too_large():
    v = validate(ModelParams(1.5, 1.5), HeavyTailPair.symmetric(1.4), Family.HEAVY_SYMMETRIC)
    assert any("1+(beta-1)/2=1.25" in s for s in v)


def test_validate_zero_integral_first_order():
    v = validate(ModelParams(1.5, 1.5), IntervalCombination.haar(), Family.FIRST_ORDER)
    assert any("degenerate" in s for s in v)


def test_validate_second_order_needs_zero_integral():
    v = validate(ModelParams(1.5, 1.5), IntervalCombination.indicator(0, 1), Family.SECOND_ORDER)
    assert any("must vanish" in s for s in v)


# --- characteristic exponent ------------------------------------------------

def test_stable_constant_matches_closed_form():
    for a in (0.5, 1.1, 1.3, 1.5, 1.8):
        assert stable_constant(a) == pytest.approx(stable_constant_closed(a), rel=1e-9)
    assert stable_constant(1.5) == pytest.approx(3.3421710328410, rel=1e-12)


def test_psi_pure_stable():
    m = LevyModel.pure_stable(1.5)
    assert m.psi(2.0) == pytest.approx(2 ** 1.5, rel=1e-12)
    assert m.psi(0.0) == 0.0
    for T in (1.0, 1e3, 1e9):
        assert m.psi_scaled(T, 1.3) == 1.3 ** 1.5


def test_psi_zero_for_rv_density():
    m = LevyModel.rv_density(1.5, SlowlyVarying.log())
    assert m.psi([0.0])[0] == 0.0
    assert m.psi_scaled(1e4, [0.0])[0] == 0.0


def test_psi_log_preset_golden():
    m = LevyModel.rv_density(1.5, SlowlyVarying.log())
    assert m.psi([1.0])[0] == pytest.approx(PSI_LOG_Z1, rel=1e-7)
    assert m.psi([-1.0])[0] == pytest.approx(PSI_LOG_Z1, rel=1e-7)


def test_psi_scaled_log_preset_golden():
    m = LevyModel.rv_density(1.5, SlowlyVarying.log())
    assert m.psi_scaled(1e8, [1.0])[0] == pytest.approx(PSI_T_LOG_1E8_Z1, rel=1e-7)


def test_psi_scaled_log_preset_near_limit():
    # convergence is only logarithmic in T: the gap at T=1e8 is 0.0701
    m = LevyModel.rv_density(1.5, SlowlyVarying.log())
    assert abs(m.psi_scaled(1e8, [1.0])[0] - 1.0) <= 0.05


def test_psi_constant_f_reduces_to_stable():
    m = LevyModel.rv_density(1.5, SlowlyVarying.constant(1.0))
    assert m.kind == "pure-stable"


def test_levy_density_rate_consistent():
    m = LevyModel.rv_density(1.5, SlowlyVarying.log())
    from scipy import integrate
    direct = 2 * integrate.quad(m.levy_density, 0.5, np.inf)[0]
    assert m.jump_rate(0.5) == pytest.approx(direct, rel=1e-7)


# --- normalizations and Hurst indices --------------------------------------

P15 = ModelParams(1.5, 1.5)


def test_normalization_first_order():
    n = normalization(LimitSpec.first_order(P15), 1e3)
    assert n.scale == pytest.approx(10 ** (3 * 7 / 9), rel=1e-12)
    assert n.scale == pytest.approx(215.44, rel=1e-4)
    assert n.D_T == pytest.approx(1e3)


def test_normalization_second_order():
    n = normalization(LimitSpec.second_order(P15), 1e3)
    assert n.scale == pytest.approx(10 ** (3 * 11 / 18), rel=1e-12)
    assert n.scale == pytest.approx(68.13, rel=1e-4)


def test_normalization_heavy():
    n = normalization(LimitSpec.heavy(P15, 1.1), 1e3)
    assert n.scale == pytest.approx(10 ** (3 * (1 + 4 / 9 - 1.1 / 1.5)), rel=1e-12)
    assert n.scale == pytest.approx(135.9, rel=1e-3)


def test_normalization_rejects_small_T():
    with pytest.raises(ValueError):
        normalization(LimitSpec.first_order(P15), 0.5)


def test_hurst_values():
    assert hurst(LimitSpec.first_order(P15)) == pytest.approx(7 / 9)
    assert hurst(LimitSpec.second_order(P15)) == pytest.approx(11 / 18)
    assert hurst(LimitSpec.heavy(ModelParams(4 / 3, 1.5), 1.1)) == pytest.approx(1 + 0.5 - 1.1 / 1.5)
    assert hurst(LimitSpec.heavy(ModelParams(4 / 3, 1.5), 1.1)) == pytest.approx(0.76667, abs=1e-5)


def test_hurst_formula_not_range_restricted():
    # values below 3/4 are admitted by the formula
    h = hurst(LimitSpec.heavy(P15, 1.2))
    assert h == pytest.approx(1 + 1 / 2.25 - 1.2 / 1.5)
    assert h < 0.75


# --- the constant c(phi) ----------------------------------------------------

def test_c_phi_haar_integral_oracle():
    for b in (1.3, 1.5, 1.8):
        I = c_phi_squared_integral(IntervalCombination.haar(), LevyModel.pure_stable(b))
        assert I == pytest.approx(haar_integral_closed(b), rel=1e-8)


def test_c_phi_conventions():
    phi, m = IntervalCombination.haar(), LevyModel.pure_stable(1.5)
    I = haar_integral_closed(1.5)
    assert c_phi(phi, m) == pytest.approx(math.sqrt(I) / math.pi, rel=1e-8)
    assert c_phi(phi, m, "variance") == pytest.approx(math.sqrt(I / math.pi), rel=1e-8)
    assert c_phi(phi, m, "proof") == pytest.approx(math.sqrt(I), rel=1e-8)
    with pytest.raises(ValueError):
        c_phi(phi, m, "other")


def test_c_phi_partitions_agree():
    c_phi(IntervalCombination.haar(), LevyModel.pure_stable(1.5), check=True)


def test_c_phi_homogeneous():
    phi, m = IntervalCombination.haar(), LevyModel.pure_stable(1.5)
    lam = 2.5
    scaled = IntervalCombination([(a, b, lam * c) for a, b, c in phi.pieces])
    assert c_phi(scaled, m) == pytest.approx(lam * c_phi(phi, m), rel=1e-9)


def test_c_phi_heavy_tails_diverge():
    with pytest.raises(DivergentIntegralError, match="integral diverges"):
        c_phi(HeavyTailPair.symmetric(1.1), LevyModel.pure_stable(1.5))


# --- tail integral asymptotics ---------------------------------------------

def test_rv_tail_ratio_closed_form():
    b = 1.5
    for w in (1e-2, 1e-4):
        assert rv_tail_integral_check(b, w) == pytest.approx((w ** (1 - b) - 1) / ((b - 1) * w ** (1 - b)))
    assert rv_tail_integral_check(b, 1e-6) == pytest.approx(2.0, rel=0.01)


def test_rv_tail_ratio_log_trend():
    ws = [1e-2, 1e-4, 1e-6, 1e-8]
    r = np.array([rv_tail_integral_check(1.5, w, SlowlyVarying.log()) for w in ws])
    err = np.abs(r - 2.0)
    assert np.all(np.diff(err) < 0)


def test_slowly_varying_ratios_tend_to_one():
    for sv in (SlowlyVarying.log(), SlowlyVarying.iterated_log()):
        d = np.abs(sv.ratio_ladder() - 1)
        assert np.all(np.diff(d) <= 0)
    with pytest.raises(ValueError):
        SlowlyVarying("power")


def test_limit_spec_heavy_gamma():
    spec = LimitSpec.heavy(P15, 1.1, 1.2)
    assert spec.family is Family.HEAVY_ASYMMETRIC
    assert spec.gamma == 1.1
    assert LimitSpec.heavy(P15, 1.1).family is Family.HEAVY_SYMMETRIC
    with pytest.raises(ValueError):
        LimitSpec(Family.HEAVY_SYMMETRIC, P15)


def test_special_gamma_used_correctly():
    # closed form of c(a) at a = 1.5 against scipy special functions
    a = 1.5
    assert stable_constant_closed(a) == pytest.approx(math.pi / (special.gamma(2.5) * math.sin(0.75 * math.pi)))
