import math

import numpy as np
import pytest

from backend import specfun
from backend.errors import DomainError

ARGUMENTS = [0.5, 1.0, 5.0, 20.0]


def ascending_series(n, x, terms=60):
    """J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)."""
    return sum(
        (-1) ** k * (x / 2.0) ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n))
        for k in range(terms)
    )


@pytest.mark.parametrize("n", [0, 1, 2, 5])
@pytest.mark.parametrize("x", [0.5, 1.0, 5.0])
def test_j_matches_ascending_series(n, x):
    assert specfun.bessel_j(n, x) == pytest.approx(ascending_series(n, x), rel=1e-12, abs=1e-15)


def test_j_at_zero():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(3, 0.0) == 0.0


@pytest.mark.parametrize("x", ARGUMENTS)
def test_wronskian(x):
    n = np.arange(0, 51)
    j, y = specfun.bessel_j(n, x), specfun.bessel_y(n, x)
    jp, yp = specfun.bessel_j(n + 1, x), specfun.bessel_y(n + 1, x)
    lhs = jp * y - j * yp
    np.testing.assert_allclose(lhs, 2.0 / (np.pi * x), rtol=1e-12)


@pytest.mark.parametrize("x", ARGUMENTS)
def test_three_term_recurrence(x):
    n = np.arange(1, 30)
    lhs = specfun.bessel_j(n - 1, x) + specfun.bessel_j(n + 1, x)
    rhs = 2.0 * n / x * specfun.bessel_j(n, x)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-14)


def test_negative_orders():
    n = np.arange(0, 10)
    np.testing.assert_allclose(specfun.bessel_j(-n, 2.5), (-1.0) ** n * specfun.bessel_j(n, 2.5))
    np.testing.assert_allclose(specfun.hankel1(-n, 2.5), (-1.0) ** n * specfun.hankel1(n, 2.5))


def test_y_small_argument_growth():
    assert specfun.bessel_y(10, 2.0) == pytest.approx(-1.2918e5, rel=1e-3)
    asymptotic = -np.sqrt(2.0 / (np.pi * 10)) * (np.e * 2.0 / 20.0) ** -10
    assert specfun.bessel_y(10, 2.0) / asymptotic == pytest.approx(1.0, abs=0.2)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_j_decays_like_stirling(t):
    for n in range(math.ceil(4 * t), 31):
        asymptotic = np.sqrt(1.0 / (2.0 * np.pi * n)) * (np.e * t / (2.0 * n)) ** n
        assert specfun.bessel_j(n, t) / asymptotic == pytest.approx(1.0, abs=0.2)


@pytest.mark.parametrize("t", [20.0, 50.0, 200.0])
def test_hankel_large_argument(t):
    asymptotic = np.sqrt(2.0 / (np.pi * t)) * np.exp(1j * (t - np.pi / 4))
    assert abs(specfun.hankel1(0, t) - asymptotic) <= 0.2 / t * abs(asymptotic)


def test_hankel_derivative_matches_ladder():
    x, n = 3.7, np.arange(-5, 6)
    ladder = 0.5 * (specfun.hankel1(n - 1, x) - specfun.hankel1(n + 1, x))
    np.testing.assert_allclose(specfun.hankel1_derivative(n, x), ladder, rtol=1e-12)


def test_cylindrical_wave_at_origin():
    origin = np.zeros(2)
    assert specfun.cylindrical_wave(0, 2.0, origin) == 1.0
    for m in (-3, -1, 1, 4):
        assert specfun.cylindrical_wave(m, 2.0, origin) == 0.0


def test_cylindrical_wave_rejects_nonpositive_k0():
    with pytest.raises(DomainError):
        specfun.cylindrical_wave(0, 0.0, np.array([1.0, 0.0]))


def test_graf_addition():
    k0 = 2.0 * np.pi
    x = 3.0 * np.array([np.cos(0.4), np.sin(0.4)])
    y = np.array([np.cos(2.1), np.sin(2.1)])
    n = np.arange(-40, 41)
    r_x, theta_x = specfun.polar(x)
    r_y, theta_y = specfun.polar(y)
    series = np.sum(
        specfun.hankel1(n, k0 * r_x) * np.exp(1j * n * theta_x)
        * specfun.bessel_j(n, k0 * r_y) * np.exp(-1j * n * theta_y)
    )
    direct = specfun.hankel1(0, k0 * np.linalg.norm(x - y))
    assert abs(series - direct) < 1e-10


@pytest.mark.parametrize("m", [0, 3, -2])
def test_cylindrical_wave_addition(m):
    k0 = 2.0
    x, y = np.array([1.2, -0.7]), np.array([-0.9, 1.1])
    l = np.arange(-40, 41)
    series = np.sum(
        specfun.cylindrical_wave(l + m, k0, x) * np.conj(specfun.cylindrical_wave(l, k0, -y))
    )
    assert series == pytest.approx(specfun.cylindrical_wave(m, k0, x + y), abs=1e-12)


def test_gradient_matches_finite_differences():
    k0, x, h = 3.0, np.array([0.4, -0.3]), 1e-6
    for m in (-2, 0, 3):
        d1, d2 = specfun.cylindrical_wave_gradient(m, k0, x)
        fd1 = (specfun.cylindrical_wave(m, k0, x + [h, 0]) - specfun.cylindrical_wave(m, k0, x - [h, 0])) / (2 * h)
        fd2 = (specfun.cylindrical_wave(m, k0, x + [0, h]) - specfun.cylindrical_wave(m, k0, x - [0, h])) / (2 * h)
        assert d1 == pytest.approx(fd1, abs=1e-7)
        assert d2 == pytest.approx(fd2, abs=1e-7)


def test_order_cap():
    specfun.bessel_j(specfun.MAX_ORDER, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(specfun.MAX_ORDER + 1, 1.0)
    with pytest.raises(DomainError):
        specfun.hankel1(-specfun.MAX_ORDER - 1, 1.0)


def test_logarithmic_singularity_rejected():
    with pytest.raises(DomainError):
        specfun.bessel_y(0, 0.0)
    with pytest.raises(DomainError):
        specfun.hankel1(1, -1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(0, -0.5)


def test_non_integer_order_rejected():
    with pytest.raises(DomainError):
        specfun.bessel_j(0.5, 1.0)
