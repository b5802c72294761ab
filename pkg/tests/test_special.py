import math

import numpy as np
import pytest
from scipy.integrate import quad

from bsann.special import gamma_fn, normal_cdf, sigmoid, sigmoid_deriv


def test_sigmoid_center_and_saturation():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(36.0) == pytest.approx(1.0, abs=1e-15)
    assert sigmoid(-36.0) == pytest.approx(0.0, abs=1e-15)
    # stability: huge magnitudes must not overflow
    assert sigmoid(800.0) == 1.0
    assert sigmoid(-800.0) == 0.0


def test_sigmoid_monotone():
    xs = np.linspace(-10.0, 10.0, 201)
    vals = np.array([sigmoid(x) for x in xs])
    assert np.all(np.diff(vals) > 0.0)


def test_sigmoid_deriv_frozen_values():
    # s(1) = 0.7310585786300049
    assert sigmoid_deriv(1.0) == pytest.approx(0.19661193324148185, abs=1e-15)
    assert sigmoid_deriv(1.0, order=2) == pytest.approx(-0.09085774767294841, abs=1e-15)
    assert sigmoid_deriv(0.0) == 0.25
    assert sigmoid_deriv(0.0, order=2) == 0.0


def test_sigmoid_deriv_matches_finite_differences():
    h = 1e-6
    for x in (-2.5, -0.3, 0.0, 0.7, 3.1):
        fd1 = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h)
        assert sigmoid_deriv(x) == pytest.approx(fd1, rel=1e-8, abs=1e-10)
        fd2 = (sigmoid_deriv(x + h) - sigmoid_deriv(x - h)) / (2.0 * h)
        assert sigmoid_deriv(x, order=2) == pytest.approx(fd2, rel=1e-7, abs=1e-10)


def test_sigmoid_deriv_rejects_other_orders():
    with pytest.raises(ValueError):
        sigmoid_deriv(0.0, order=3)
    with pytest.raises(ValueError):
        sigmoid_deriv(0.0, order=0)


def test_gamma_against_math_gamma():
    zs = np.linspace(0.05, 10.0, 200)
    for z in zs:
        ref = math.gamma(z)
        assert abs(gamma_fn(float(z)) - ref) <= 1e-12 * abs(ref)


def test_gamma_half_is_sqrt_pi():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gamma_recurrence():
    rng = np.random.default_rng(7)
    for z in rng.uniform(0.1, 8.0, 50):
        assert gamma_fn(z + 1.0) == pytest.approx(z * gamma_fn(z), rel=1e-12)


def test_gamma_rejects_nonpositive():
    with pytest.raises(ValueError):
        gamma_fn(0.0)
    with pytest.raises(ValueError):
        gamma_fn(-1.3)


def test_normal_cdf_frozen_and_tails():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.96) == pytest.approx(0.9750021048517795, abs=1e-14)
    assert normal_cdf(-8.0) < 1e-14
    assert 1.0 - normal_cdf(8.0) < 1e-14


def test_normal_cdf_symmetry():
    rng = np.random.default_rng(3)
    for x in rng.uniform(-5.0, 5.0, 100):
        assert normal_cdf(x) + normal_cdf(-x) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("x", [-3.0, -1.0, -0.2, 0.35, 1.5, 2.7])
def test_normal_cdf_against_quadrature(x):
    ref, _ = quad(lambda u: math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi), -12.0, x, limit=200)
    assert normal_cdf(x) == pytest.approx(ref, abs=1e-13)
