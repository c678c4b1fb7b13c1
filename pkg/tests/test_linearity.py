import io

import numpy as np
import pytest
from scipy.stats import kstest

from had import (
    DegenerateDesignError,
    InputError,
    load_panel,
    poly_test_discrete,
    stute_covariates,
    stute_joint,
    stute_statistic,
    stute_test,
    yatchew_test,
)
from had.linearity import _ETA_HI, _ETA_LO, _P_HI


def naive_cusum(d, y, mode="linearity"):
    """O(G^2) double-loop oracle for the cusum statistic."""
    d = np.asarray(d, float)
    y = np.asarray(y, float)
    G = d.size
    if mode == "linearity":
        X = np.column_stack([np.ones(G), d])
    else:
        X = np.ones((G, 1))
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    eps = y - X @ beta
    order = np.argsort(d, kind="stable")
    es = eps[order]
    S = 0.0
    for g in range(1, G + 1):
        c = sum(es[h] for h in range(g))
        S += (g / G) ** 2 * (c / g) ** 2
    return S


def test_hand_example_two_81ths():
    d = np.linspace(0.1, 1.0, 10)
    # embed the 3-point case in a 10-point vector? no: the hand value is for
    # exactly the 3 points, so compute the statistic directly
    S, resid = stute_statistic(np.array([1.0, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
                               np.array([0.0, 1, 0, 1, 0, 1, 0, 1, 0, 1]))
    assert S == pytest.approx(naive_cusum(np.arange(1.0, 11), np.array([0.0, 1, 0, 1, 0, 1, 0, 1, 0, 1])), abs=1e-14)

    # the documented 3-point value via the same cusum arithmetic
    eps = np.array([-1 / 3, 2 / 3, -1 / 3])
    c = np.cumsum(eps)
    S3 = float(np.sum(c * c) / 9)
    assert S3 == pytest.approx(2 / 81, abs=1e-15)


def test_zero_residuals_zero_statistic():
    d = np.linspace(0.0, 1.0, 30)
    y = 2.0 + 3.0 * d
    S, resid = stute_statistic(d, y)
    assert S < 1e-28
    assert np.allclose(resid, 0.0, atol=1e-13)


def test_vectorized_matches_loop_oracle():
    rng = np.random.default_rng(12)
    for _ in range(20):
        G = 200
        d = rng.random(G)
        y = rng.standard_normal(G) + d
        for mode in ("linearity", "mean_independence"):
            S, _ = stute_statistic(d, y, mode)
            assert abs(S - naive_cusum(d, y, mode)) < 1e-12


def test_statistic_invariant_to_affine_in_dose():
    rng = np.random.default_rng(1)
    d = rng.random(60)
    y = rng.standard_normal(60)
    S0, _ = stute_statistic(d, y)
    S1, _ = stute_statistic(d, y + 4.0 + 2.5 * d)
    assert S0 == pytest.approx(S1, rel=1e-12)


def test_multiplier_two_point_law_moments():
    p = _P_HI
    for k, want in ((1, 0.0), (2, 1.0), (3, 1.0)):
        moment = p * _ETA_HI**k + (1 - p) * _ETA_LO**k
        assert moment == pytest.approx(want, abs=1e-12)


def test_bootstrap_deterministic_and_blocking_invariant():
    rng = np.random.default_rng(2)
    d = rng.random(80)
    y = 1 + 2 * d + rng.standard_normal(80)
    r1 = stute_test(d, y, B=200, seed=11)
    r2 = stute_test(d, y, B=200, seed=11)
    r3 = stute_test(d, y, B=200, seed=11, block=7)
    assert r1.p_value == r2.p_value == r3.p_value
    r4 = stute_test(d, y, B=200, seed=12)
    assert r4.p_value != r1.p_value or r4.S == r1.S


def test_bootstrap_row_order_invariance():
    rng = np.random.default_rng(3)
    d = rng.random(70)
    y = 1 + 2 * d + rng.standard_normal(70)
    perm = rng.permutation(70)
    a = stute_test(d, y, B=150, seed=5)
    b = stute_test(d[perm], y[perm], B=150, seed=5)
    assert a.S == pytest.approx(b.S, rel=1e-12)
    assert a.p_value == b.p_value


def test_exact_fit_bootstrap_p_is_one():
    d = np.linspace(0.0, 1.0, 40)
    rep = stute_test(d, 1.0 + 2.0 * d, B=99, seed=0)
    assert rep.S == pytest.approx(0.0, abs=1e-28)
    assert rep.p_value == 1.0


def test_degenerate_dose_rejected():
    with pytest.raises(DegenerateDesignError):
        stute_statistic(np.full(20, 0.4), np.random.default_rng(0).standard_normal(20))
    with pytest.raises(InputError):
        stute_statistic(np.arange(5.0), np.arange(5.0))
    with pytest.raises(InputError):
        stute_test(np.linspace(0, 1, 20), np.zeros(20), B=50)


def _joint_panel(trend=0.0, effect=0.0, noise=0.0, G=40, seed=0):
    rng = np.random.default_rng(seed)
    doses = rng.random(G) + 0.05
    lines = ["unit,time,outcome,dose"]
    for g in range(G):
        a = float(rng.standard_normal())
        b = trend * float(rng.standard_normal())
        for t in (1, 2, 3, 4, 5):
            y = a + b * t + (effect * doses[g] * (t - 2) if t >= 3 else 0.0)
            y += noise * float(rng.standard_normal())
            dose = doses[g] if t >= 3 else 0.0
            lines.append(f"u{g},{t},{float(y)!r},{float(dose)!r}")
    return load_panel(io.StringIO("\n".join(lines) + "\n"))


def test_joint_single_period_equals_plain_test():
    panel = _joint_panel(effect=1.0, noise=0.3, seed=4)
    joint = stute_joint(panel, [3], mode="linearity", B=150, seed=9)
    from had import difference

    sample = difference(panel, 2, 3)
    single = stute_test(sample.d, sample.dy, "linearity", B=150, seed=9)
    assert joint.S == pytest.approx(single.S, rel=1e-12)
    assert joint.p_value == single.p_value
    assert joint.periods == (3,)


def test_joint_noiseless_linear_p_one():
    panel = _joint_panel(effect=1.0, noise=0.0, seed=5)
    rep = stute_joint(panel, [3, 4, 5], mode="linearity", B=120, seed=1)
    assert rep.S == pytest.approx(0.0, abs=1e-24)
    assert rep.p_value == 1.0
    assert len(rep.per_period_S) == 3


def test_joint_detrended_pretrends():
    panel = _joint_panel(trend=1.0, effect=1.0, noise=0.01, seed=6)
    rep = stute_joint(panel, [1], mode="mean_independence", B=120, seed=2, detrend=True)
    # unit trends removed almost exactly: tiny statistic, large p
    assert rep.p_value > 0.2


def naive_multivariate_cusum(d, y, x):
    G = d.size
    X = np.column_stack([x, d[:, None] * x])
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    eps = y - X @ beta
    S = 0.0
    for g in range(G):
        total = 0.0
        for h in range(G):
            le_d = d[h] < d[g] or (d[h] == d[g] and h <= g)
            le_x = all(
                x[h, j] <= x[g, j]
                for j in range(x.shape[1])
                if np.ptp(x[:, j]) > 0
            )
            if le_d and le_x:
                total += eps[h]
        S += total**2
    return S / G**2


def test_covariate_statistic_matches_triple_loop_oracle():
    rng = np.random.default_rng(7)
    G = 100
    d = rng.random(G)
    x = np.column_stack([np.ones(G), rng.random(G), rng.standard_normal(G)])
    y = x @ np.array([1.0, -0.5, 0.2]) + d * (x @ np.array([0.4, 0.1, 0.0]))
    y += 0.3 * rng.standard_normal(G)
    rep = stute_covariates(d, y, x, B=99, seed=3)
    assert rep.S == pytest.approx(naive_multivariate_cusum(d, y, x), abs=1e-12)


def test_covariate_intercept_only_reduces_to_plain_statistic():
    rng = np.random.default_rng(8)
    G = 60
    d = rng.random(G)
    y = 1 + d + 0.4 * rng.standard_normal(G)
    x = np.ones((G, 1))
    a = stute_covariates(d, y, x, B=150, seed=4)
    b = stute_test(d, y, "linearity", B=150, seed=4)
    assert a.S == pytest.approx(b.S, rel=1e-12)
    assert a.p_value == b.p_value


def test_covariate_zero_residuals():
    rng = np.random.default_rng(9)
    G = 50
    d = rng.random(G)
    x = np.column_stack([np.ones(G), rng.random(G)])
    y = x @ np.array([2.0, 1.0]) + d * (x @ np.array([0.5, -0.2]))
    rep = stute_covariates(d, y, x, B=99, seed=1)
    assert rep.S < 1e-24
    assert rep.p_value == 1.0


def test_covariate_requires_intercept_and_full_rank():
    rng = np.random.default_rng(10)
    G = 40
    d = rng.random(G)
    y = rng.standard_normal(G)
    with pytest.raises(InputError, match="intercept"):
        stute_covariates(d, y, rng.random((G, 2)), B=99)
    x = np.column_stack([np.ones(G), rng.random(G)])
    x = np.column_stack([x, x[:, 1]])
    with pytest.raises(DegenerateDesignError):
        stute_covariates(d, y, x, B=99)


def test_yatchew_hand_fixture():
    with pytest.warns(UserWarning):
        rep = yatchew_test(np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, 0.0]))
    assert rep.sig2_diff == pytest.approx(1 / 3, abs=1e-15)
    assert rep.sigW4_hat == pytest.approx(4 / 81, abs=1e-15)


def test_yatchew_exact_linear_degenerate():
    d = np.linspace(0, 1, 50)
    rep = yatchew_test(d, 1 + 2 * d)
    assert rep.degenerate
    assert rep.p_value == 1.0


def test_yatchew_affine_invariance():
    rng = np.random.default_rng(11)
    d = rng.random(200)
    y = 1 + d + 0.5 * rng.standard_normal(200)
    base = yatchew_test(d, y)
    shifted = yatchew_test(d, y + 11.0)
    scaled = yatchew_test(d, 7.0 * y)
    assert shifted.T_hr == pytest.approx(base.T_hr, abs=1e-10)
    assert scaled.T_hr == pytest.approx(base.T_hr, abs=1e-10)


def test_yatchew_normal_null_distribution():
    # homoskedastic linear null: T_hr should look standard normal
    stats = []
    for rep in range(2000):
        rng = np.random.default_rng(rep + 10_000)
        d = rng.random(1000)
        y = 1 + 2 * d + rng.standard_normal(1000)
        stats.append(yatchew_test(d, y).T_hr)
    assert kstest(stats, "norm").pvalue > 0.01


def test_poly_exact_line_p_one():
    d = np.repeat([0.0, 1.0, 2.0], 30)
    y = 1.0 + 2.0 * d
    rep = poly_test_discrete(d, y, "linearity")
    assert rep.statistic == pytest.approx(0.0, abs=1e-16)
    assert rep.p_value == 1.0
    assert rep.k_values == 3


def test_poly_two_values_no_room_linearity():
    d = np.repeat([0.0, 1.0], 20)
    y = np.random.default_rng(0).standard_normal(40)
    with pytest.raises(InputError, match="no room"):
        poly_test_discrete(d, y, "linearity")
    rep = poly_test_discrete(d, y, "mean_independence")
    assert rep.df == 1


def test_poly_detects_nonlinearity():
    rng = np.random.default_rng(13)
    d = np.repeat([0.0, 1.0, 2.0], 400)
    means = {0.0: 0.0, 1.0: 0.0, 2.0: 1.0}
    y = np.array([means[v] for v in d]) + 0.3 * rng.standard_normal(d.size)
    rep = poly_test_discrete(d, y, "linearity")
    assert rep.p_value < 1e-6


def test_poly_too_many_values_rejected():
    d = np.linspace(0, 1, 60)
    with pytest.raises(InputError, match="continuous"):
        poly_test_discrete(d, d, "linearity")


def test_poly_mean_independence_detects_dose_dependence():
    rng = np.random.default_rng(14)
    d = np.repeat([0.0, 0.5, 1.0], 300)
    y = 2.0 * d + 0.2 * rng.standard_normal(d.size)
    rep = poly_test_discrete(d, y, "mean_independence")
    assert rep.p_value < 1e-6
    assert rep.df == 2
