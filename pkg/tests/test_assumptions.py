import math

import numpy as np
import pytest

from tamed_milstein.assumptions import check_a2, check_a3, check_all, check_derivative_regularity
from tamed_milstein.errors import UsageError
from tamed_milstein.model import ModelDomain, SdeModel, make_builtin
from tamed_milstein.noise import NoiseStream

BOX = ModelDomain.cube(-3, 3, 1)
CRITICAL = make_builtin("paper-example", sigma0=math.sqrt(2 / 13))


def test_a2_paper_example_bound():
    rep = check_a2(CRITICAL, 14, BOX, 5000, NoiseStream(1))
    assert rep.passed and rep.estimated_L <= 2.0 + 1e-12
    # closed form (2 - 2x^2) / (1 + x^2) at the worst sample
    x = rep.worst_point[0]
    assert rep.estimated_L == pytest.approx((2 - 2 * x**2) / (1 + x**2), rel=1e-12)


def test_a2_zero_model():
    zero = SdeModel("zero", 1, 1, lambda x: 0 * x, lambda x: 0 * x[..., None])
    assert check_a2(zero, 4, BOX, 100).estimated_L == 0.0


def test_a2_flags_strong_noise():
    noisy = make_builtin("paper-example", sigma0=10.0)
    small_box = check_a2(noisy, 14, ModelDomain.cube(-5, 5, 1), 2000)
    big_box = check_a2(noisy, 14, ModelDomain.cube(-10, 10, 1), 2000)
    assert big_box.estimated_L > small_box.estimated_L
    assert not big_box.passed and big_box.unbounded


def test_a3_paper_example_bound():
    sigma0 = 0.5  # sigma0^2 (p1 - 1) = 0.625 <= 1 for p1 = 3.5
    rep = check_a3(make_builtin("paper-example", sigma0=sigma0), 3.5, BOX, 6000)
    assert rep.passed and rep.estimated_L <= 2.0 + 1e-9


def test_a3_linear_model_is_exact():
    c = 0.7
    lin = SdeModel("lin", 1, 1, lambda x: c * x, lambda x: np.full(x.shape + (1,), 0.3))
    rep = check_a3(lin, 3.0, BOX, 3000)
    assert rep.estimated_L == pytest.approx(2 * c, rel=1e-9)


def test_a3_pairs_are_never_coincident():
    lin = SdeModel("lin", 1, 1, lambda x: x, lambda x: 0 * x[..., None])
    rep = check_a3(lin, 3.0, BOX, 3000)
    assert np.isfinite(rep.estimated_L)


def test_derivative_regularity_paper_example():
    a4, a5 = check_derivative_regularity(CRITICAL, 2.0, BOX, 6000)
    assert a4.passed and a4.estimated_L <= 3.0
    assert a5.passed and a5.estimated_L == pytest.approx(2 * math.sqrt(2 / 13), rel=1e-6)


def test_derivative_regularity_trivial_models():
    const = SdeModel("const", 1, 1, lambda x: 0 * x + 1.0, lambda x: np.full(x.shape + (1,), 0.5))
    a4, a5 = check_derivative_regularity(const, 0.0, BOX, 500)
    assert a4.estimated_L == 0.0 and a5.estimated_L == 0.0
    gbm = make_builtin("gbm")
    _, a5 = check_derivative_regularity(gbm, None, BOX, 500)
    assert a5.estimated_L == 0.0 and a5.passed


def test_reports_deterministic_and_prefix_monotone():
    a = check_a3(CRITICAL, 3.5, BOX, 3000, NoiseStream(7))
    b = check_a3(CRITICAL, 3.5, BOX, 3000, NoiseStream(7))
    assert a.estimated_L == b.estimated_L
    est = [check_a3(CRITICAL, 3.5, BOX, n, NoiseStream(7)).estimated_L for n in (30, 300, 3000)]
    assert est[0] <= est[1] <= est[2]
    est2 = [check_a2(CRITICAL, 14, BOX, n, NoiseStream(7)).estimated_L for n in (10, 100, 1000)]
    assert est2[0] <= est2[1] <= est2[2]


def test_all_four_checks_in_paper_regime():
    reports = check_all(CRITICAL, 14, 3.5, BOX, 10_000, NoiseStream(42))
    assert [r.assumption for r in reports] == ["A2", "A3", "A4", "A5"]
    assert all(r.passed and r.estimated_L <= 4 for r in reports)


def test_two_dimensional_model_checks():
    reports = check_all(make_builtin("superlinear-2d"), 14, 3.5, samples=3000)
    assert all(r.passed for r in reports)


def test_validation():
    with pytest.raises(UsageError):
        check_a2(CRITICAL, 1.5)
    with pytest.raises(UsageError):
        check_a3(CRITICAL, 2.0)
    with pytest.raises(UsageError):
        check_a2(CRITICAL, 14, ModelDomain.cube(-1, 1, 2))
