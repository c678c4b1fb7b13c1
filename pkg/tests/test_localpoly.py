import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from had import DegenerateDesignError, InputError, local_fit, make_kernel

EPA = make_kernel()
UNI = make_kernel("uniform")


def test_exact_affine_recovery():
    rng = np.random.default_rng(0)
    d = rng.random(200)
    y = 2.0 + 3.0 * d
    for h in (0.3, 0.7, 1.0):
        fit = local_fit(d, y, EPA, h, p=1)
        assert abs(fit.point - 2.0) < 1e-8
        assert abs(fit.coefs[1] - 3.0) < 1e-8


def test_constant_data():
    fit = local_fit(np.array([0.1, 0.2, 0.3]), np.ones(3), UNI, h=1.0, p=1)
    assert abs(fit.point - 1.0) < 1e-12
    assert abs(fit.coefs[1]) < 1e-12


def test_quadratic_fit_against_dense_wls_oracle():
    # independent oracle: weighted normal equations solved directly
    rng = np.random.default_rng(42)
    d = rng.random(400)
    y = 0.5 + d + 2.0 * d**2 + 0.2 * rng.standard_normal(400)
    h = 0.6
    fit = local_fit(d, y, EPA, h, p=2)

    w = EPA.k(d / h) / h
    X = np.column_stack([np.ones_like(d), d, d**2])
    W = np.diag(w)
    beta = np.linalg.solve(X.T @ W @ X, X.T @ W @ y)
    assert np.allclose(fit.coefs, beta, rtol=1e-8, atol=1e-10)


def test_influence_reproduces_coefficients():
    rng = np.random.default_rng(3)
    d = rng.random(100)
    y = rng.standard_normal(100)
    fit = local_fit(d, y, EPA, 0.5, p=2)
    assert np.allclose(fit.influence @ y, fit.coefs, atol=1e-12)


def test_weighted_residuals_orthogonal_to_design():
    rng = np.random.default_rng(9)
    d = rng.random(150)
    y = rng.standard_normal(150)
    fit = local_fit(d, y, EPA, 0.4, p=1)
    scale = float(np.abs(y).max())
    for j in range(2):
        dot = float(np.sum(fit.weights * fit.residuals * d**j))
        assert abs(dot) < 1e-8 * max(scale, 1.0)


@given(
    scale=st.floats(min_value=0.1, max_value=50.0),
    shift=st.floats(min_value=-20.0, max_value=20.0),
)
@settings(max_examples=25, deadline=None)
def test_scale_and_shift_equivariance(scale, shift):
    rng = np.random.default_rng(7)
    d = rng.random(80)
    y = rng.standard_normal(80)
    base = local_fit(d, y, EPA, 0.5, p=1)
    scaled = local_fit(d, scale * y + shift, EPA, 0.5, p=1)
    assert abs(scaled.point - (scale * base.point + shift)) < 1e-8 * (1 + abs(scale))
    assert abs(scaled.coefs[1] - scale * base.coefs[1]) < 1e-8 * (1 + abs(scale))


def test_n_eff_monotone_in_bandwidth():
    rng = np.random.default_rng(11)
    d = rng.random(120)
    y = rng.standard_normal(120)
    hs = [0.05, 0.1, 0.3, 0.6, 1.0]
    effs = [local_fit(d, y, EPA, h, p=1).n_eff for h in hs]
    assert effs == sorted(effs)


def test_uniform_full_bandwidth_equals_global_ols():
    rng = np.random.default_rng(13)
    d = rng.random(90)
    y = 1.0 + 2.0 * d + 0.1 * rng.standard_normal(90)
    fit = local_fit(d, y, UNI, h=float(d.max()) * 1.01, p=1)
    X = np.column_stack([np.ones_like(d), d])
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    assert np.allclose(fit.coefs, beta, atol=1e-10)


def test_boundary_shift():
    rng = np.random.default_rng(17)
    d = 0.5 + rng.random(80)
    y = 4.0 - 2.0 * (d - 0.5)
    fit = local_fit(d, y, EPA, 0.8, p=1, boundary=0.5)
    assert abs(fit.point - 4.0) < 1e-8
    assert abs(fit.coefs[1] + 2.0) < 1e-8


def test_insufficient_observations_raises():
    d = np.array([0.01, 0.02, 0.9, 0.95])
    y = np.zeros(4)
    with pytest.raises(DegenerateDesignError):
        local_fit(d, y, EPA, h=0.05, p=1)


def test_singular_design_raises():
    # all in-window doses identical: the slope column vanishes
    d = np.array([0.1] * 6 + [5.0, 6.0])
    y = np.arange(8.0)
    with pytest.raises(DegenerateDesignError):
        local_fit(d, y, UNI, h=0.2, p=1)


def test_bad_arguments_raise():
    d = np.linspace(0, 1, 20)
    y = np.zeros(20)
    with pytest.raises(InputError):
        local_fit(d, y, EPA, h=-1.0, p=1)
    with pytest.raises(InputError):
        local_fit(d, y, EPA, h=0.5, p=5)
    with pytest.raises(InputError):
        local_fit(d, y[:-1], EPA, h=0.5, p=1)
