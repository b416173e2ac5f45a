import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamed_milstein.errors import NumericalFailure, UsageError
from tamed_milstein.model import (
    BUILTINS,
    SdeModel,
    diffusion_jacobian,
    eval_diffusion,
    eval_drift,
    finite_difference_jacobian,
    gbm_exact,
    lambda_sigma,
    make_builtin,
)


@pytest.fixture
def paper():
    return make_builtin("paper-example", sigma0=0.35)


def test_paper_drift_values(paper):
    assert eval_drift(paper, 1.0)[0] == 0.0
    assert eval_drift(paper, 2.0)[0] == pytest.approx(2 * (1 - 4))


def test_paper_diffusion_values(paper):
    assert eval_diffusion(paper, 1.0)[0, 0] == 0.0
    assert eval_diffusion(paper, 2.0)[0, 0] == pytest.approx(-1.05)


def test_gbm_zero_parameters():
    g = make_builtin("gbm", mu=0.0, sigma0=0.0)
    for x in (-3.0, 0.5, 7.0):
        assert eval_drift(g, x)[0] == 0.0
        assert eval_diffusion(g, x)[0, 0] == 0.0


def test_jacobian_values(paper):
    assert diffusion_jacobian(paper, 2.0)[0, 0, 0] == pytest.approx(-1.4)
    g = make_builtin("gbm", sigma0=0.2)
    fd = finite_difference_jacobian(g, 3.0)
    assert fd[0, 0, 0] == pytest.approx(0.2, abs=1e-5)


def test_constant_diffusion_has_zero_jacobian_and_lambda():
    model = SdeModel("additive", 1, 1, lambda x: -x, lambda x: np.full(x.shape + (1,), 0.7))
    assert np.all(diffusion_jacobian(model, 1.3) == 0.0)
    assert np.all(lambda_sigma(model, 1.3, 0) == 0.0)


def test_lambda_sigma_values(paper):
    assert lambda_sigma(paper, 0.0, 0)[0, 0] == 0.0
    assert lambda_sigma(paper, 2.0, 0)[0, 0] == pytest.approx(1.47)


@given(st.floats(-5, 5))
def test_lambda_is_sigma_times_derivative_in_1d(x):
    m = make_builtin("paper-example", sigma0=0.35)
    sig = eval_diffusion(m, x)[0, 0]
    der = diffusion_jacobian(m, x)[0, 0, 0]
    assert lambda_sigma(m, x, 0)[0, 0] == sig * der


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_analytic_jacobian_matches_finite_differences(name):
    model = make_builtin(name)
    rng = np.random.default_rng(3)
    x = model.domain.lower + rng.random((100, model.d)) * (model.domain.upper - model.domain.lower)
    ana = diffusion_jacobian(model, x)
    fd = finite_difference_jacobian(model, x)
    np.testing.assert_allclose(ana, fd, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_lambda_analytic_vs_finite_difference(name):
    model = make_builtin(name)
    fd_model = SdeModel(model.name, model.d, model.m, model.drift, model.diffusion, None, model.rho)
    rng = np.random.default_rng(4)
    x = model.domain.lower + rng.random((100, model.d)) * (model.domain.upper - model.domain.lower)
    for j in range(model.m):
        np.testing.assert_allclose(lambda_sigma(fd_model, x, j), lambda_sigma(model, x, j), rtol=1e-4, atol=1e-8)


def test_gbm_linear_growth_on_domain():
    g = make_builtin("gbm", mu=1.0, sigma0=0.5)
    x = np.linspace(g.domain.lower[0], g.domain.upper[0], 201)[:, None]
    L = 1.0
    assert np.all(np.abs(eval_drift(g, x)[:, 0]) <= L * (1 + np.abs(x[:, 0])))
    assert np.all(np.abs(eval_diffusion(g, x)[:, 0, 0]) <= L * (1 + np.abs(x[:, 0])))


def test_builtin_metadata():
    assert make_builtin("paper-example", sigma0=0.35).rho == 2.0
    p = make_builtin("paper-example")
    assert (p.d, p.m) == (1, 1)
    assert make_builtin("gbm", mu=1, sigma0=0.5).rho == 0.0
    s = make_builtin("superlinear-2d")
    assert (s.d, s.m) == (2, 2) and not s.commutative_noise


def test_superlinear_2d_is_non_commutative():
    s = make_builtin("superlinear-2d")
    x = np.array([0.4, -0.7])
    lam0 = lambda_sigma(s, x, 0)
    lam1 = lambda_sigma(s, x, 1)
    # commutativity would need Lambda^0 sigma^{(.,1)} == Lambda^1 sigma^{(.,0)}
    assert not np.allclose(lam0[:, 1], lam1[:, 0])


def test_unknown_model_and_parameter():
    with pytest.raises(UsageError):
        make_builtin("nonexistent")
    with pytest.raises(UsageError):
        make_builtin("paper-example", mu=1.0)


def test_rho_constraint():
    with pytest.raises(UsageError):
        SdeModel("bad", 1, 1, lambda x: x, lambda x: x[..., None], rho=0.5)


def test_non_finite_output_raises():
    model = SdeModel("log", 1, 1, lambda x: np.log(x), lambda x: x[..., None])
    with np.errstate(invalid="ignore"), pytest.raises(NumericalFailure) as info:
        eval_drift(model, -1.0)
    assert info.value.point is not None


def test_gbm_exact_values():
    assert gbm_exact(1, 0, 0, 1, 123.0) == 1.0
    assert gbm_exact(1, 1, 0, 1, 0) == pytest.approx(math.e, rel=1e-15)
    assert gbm_exact(2, 0.5, 1, 1, 0.3) == pytest.approx(2 * math.exp(0.3), rel=1e-15)
    with pytest.raises(UsageError):
        gbm_exact(1, 0, 0, -1, 0)
