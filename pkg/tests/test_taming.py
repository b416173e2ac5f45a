import numpy as np
import pytest
from hypothesis import given, strategies as st

from tamed_milstein.errors import UsageError
from tamed_milstein.model import eval_diffusion, eval_drift, lambda_sigma, make_builtin
from tamed_milstein.taming import TamingConfig, tame_coefficients, taming_factor

PAPER = make_builtin("paper-example", sigma0=0.35)


def test_factor_values():
    assert taming_factor(TamingConfig(7, 1.0, 2.0), 0.0) == 1.0
    assert taming_factor(TamingConfig(4, 1.0, 2.0), 2.0) == pytest.approx(0.2)
    assert taming_factor(TamingConfig(10, 1.0, 0.0), 5.0) == pytest.approx(10 / 11)
    # |x|^0 = 1 also at the origin
    assert taming_factor(TamingConfig(10, 1.0, 0.0), 0.0) == pytest.approx(10 / 11)


def test_theta_validation():
    with pytest.raises(UsageError):
        TamingConfig(4, 0.25, 2.0)
    with pytest.raises(UsageError):
        TamingConfig(0, 1.0, 2.0)


def test_tamed_values_hand_example():
    tv = tame_coefficients(PAPER, TamingConfig(4, 1.0, 2.0), 2.0)
    assert tv.drift[0] == pytest.approx(-1.2)
    assert tv.diffusion[0, 0] == pytest.approx(-0.21)
    assert tv.lam[0, 0, 0] == pytest.approx(0.294)


@pytest.mark.parametrize("name", ["paper-example", "ginzburg-landau", "superlinear-2d"])
def test_origin_is_untouched_for_rho_positive(name):
    model = make_builtin(name)
    x = np.zeros(model.d)
    tv = tame_coefficients(model, TamingConfig.for_model(model, 9), x)
    np.testing.assert_array_equal(tv.drift, eval_drift(model, x))
    np.testing.assert_array_equal(tv.diffusion, eval_diffusion(model, x))


def test_drift_increases_towards_untamed():
    b = eval_drift(PAPER, 1.5)[0]
    vals = [tame_coefficients(PAPER, TamingConfig(n, 1.0, 2.0), 1.5).drift[0] for n in (10, 100, 1000)]
    # b(1.5) < 0, so tamed values approach it from above in magnitude-order
    assert abs(vals[0]) < abs(vals[1]) < abs(vals[2]) < abs(b)


@given(st.floats(-50, 50), st.integers(1, 10**6))
def test_tamed_bounded_by_untamed(x, n):
    cfg = TamingConfig(n, 1.0, 2.0)
    tv = tame_coefficients(PAPER, cfg, x)
    assert 0 < tv.factor <= 1
    assert abs(tv.drift[0]) <= abs(eval_drift(PAPER, x)[0])
    assert abs(tv.diffusion[0, 0]) <= abs(eval_diffusion(PAPER, x)[0, 0])
    assert abs(tv.lam[0, 0, 0]) <= abs(lambda_sigma(PAPER, x, 0)[0, 0])


def test_tamed_drift_growth_bound_theta_one():
    # |b(x)| <= 1 + |x|^3 for the double well, so |b^n(x)| <= (1 + |x|^3) / (1 + |x|^4 / n)
    # which is at most 2 n^{1/2} (1 + |x|)
    x = np.linspace(-100, 100, 20001)[:, None]
    for n in (1, 10, 100, 10**4):
        tv = tame_coefficients(PAPER, TamingConfig(n, 1.0, 2.0), x)
        assert np.all(np.abs(tv.drift[:, 0]) <= 2.0 * np.sqrt(n) * (1 + np.abs(x[:, 0])))


def test_factor_monotone_in_n_and_limit():
    x = np.array([1.7])
    ns = [10**k for k in range(1, 7)]
    f = [float(taming_factor(TamingConfig(n, 1.0, 2.0), x)) for n in ns]
    assert all(a < b for a, b in zip(f, f[1:]))
    b = eval_drift(PAPER, x)[0]
    for n, fac in zip(ns, f):
        tv = tame_coefficients(PAPER, TamingConfig(n, 1.0, 2.0), x)
        assert abs(tv.drift[0] - fac * b) <= 1e-9
        assert abs(tv.drift[0] - b) <= abs(b) * 1.7**4 / n


def test_shared_factor_bitwise():
    model = make_builtin("superlinear-2d")
    x = np.array([[0.3, -1.2], [2.0, 0.5]])
    tv = tame_coefficients(model, TamingConfig.for_model(model, 16), x)
    b = eval_drift(model, x)
    s = eval_diffusion(model, x)
    np.testing.assert_array_equal(tv.drift, tv.factor[:, None] * b)
    np.testing.assert_array_equal(tv.diffusion, tv.factor[:, None, None] * s)
