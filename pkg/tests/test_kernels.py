import numpy as np
import pytest
from scipy.integrate import quad

from had import InputError, make_kernel
from had.kernels import KERNEL_NAMES, curvature_pilot_constants


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_moments_match_quadrature(name):
    k = make_kernel(name)
    for j, stored in enumerate(k.moments):
        val, err = quad(lambda t: t**j * float(k.k(np.array([t]))[0]), 0.0, 1.0)
        assert abs(val - stored) < 1e-10


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_equivalent_kernel_square_integral_matches_quadrature(name):
    k = make_kernel(name)
    delta = k.kappa0 * k.kappa2 - k.kappa1**2
    assert delta > 0

    def kstar_sq(t):
        kt = float(k.k(np.array([t]))[0])
        return ((k.kappa2 - k.kappa1 * t) / delta * kt) ** 2

    val, _ = quad(kstar_sq, 0.0, 1.0)
    assert abs(val - k.kstar_sq_int) < 1e-10


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_c_constant_matches_moment_formula(name):
    k = make_kernel(name)
    delta = k.kappa0 * k.kappa2 - k.kappa1**2
    assert abs(k.c_const - (k.kappa2**2 - k.kappa1 * k.kappa3) / delta) < 1e-14


def test_uniform_values():
    k = make_kernel("uniform")
    assert k.moments == (1.0, 0.5, 1 / 3, 0.25)
    assert abs(k.c_const - (-1 / 6)) < 1e-14
    assert abs(k.kstar_sq_int - 4.0) < 1e-12


def test_triangular_values():
    k = make_kernel("triangular")
    assert k.moments == (0.5, 1 / 6, 1 / 12, 1 / 20)
    assert abs(k.c_const - (-1 / 10)) < 1e-14


def test_epanechnikov_values():
    k = make_kernel("epanechnikov")
    assert k.moments == (0.5, 3 / 16, 1 / 10, 1 / 16)
    assert abs(k.c_const - (-0.11579)) < 1e-5


def test_higher_moments_by_quadrature():
    k = make_kernel("epanechnikov")
    assert abs(k.moment(4) - 3 / 70) < 1e-10
    assert abs(k.moment(5) - 1 / 32) < 1e-10


def test_aliases_and_default():
    assert make_kernel().name == "epanechnikov"
    assert make_kernel("epa").name == "epanechnikov"
    assert make_kernel("tri").name == "triangular"
    assert make_kernel("uni").name == "uniform"


def test_unknown_kernel_rejected():
    with pytest.raises(InputError):
        make_kernel("gaussian")


def test_kernel_vanishes_outside_support():
    for name in KERNEL_NAMES:
        k = make_kernel(name)
        t = np.array([-0.5, 1.5, 2.0])
        assert np.all(k.k(t) == 0.0)


def test_curvature_constants_positive():
    for name in KERNEL_NAMES:
        bias22, var22 = curvature_pilot_constants(make_kernel(name))
        assert bias22 > 0 and var22 > 0
