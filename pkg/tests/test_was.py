import io

import numpy as np
import pytest

from had import (
    BandwidthSelection,
    DifferencedSample,
    InputError,
    estimate_mass_point,
    estimate_shifted,
    estimate_was,
    event_study,
    load_panel,
    make_kernel,
)
from conftest import grid_sample

EPA = make_kernel()
UNI = make_kernel("uniform")


def _full_span_bw(d):
    span = float(d.max() - d.min()) * 1.0000001
    return BandwidthSelection(span, span, 0.0, 1.0, 1.0, d.size)


def test_unit_slope_noiseless():
    s = grid_sample(G=200, slope=1.0)
    est = estimate_was(s)
    assert abs(est.beta - 1.0) < 1e-6
    assert abs(est.mu0_hat) < 1e-6
    assert est.mode == "qug"


def test_numerator_decomposition_identity():
    rng = np.random.default_rng(0)
    d = rng.random(300)
    dy = d + d * d + rng.standard_normal(300)
    s = DifferencedSample(dy=dy, d=d, base_period=1, target_period=2)
    est = estimate_was(s)
    lhs = est.beta * np.mean(d) + est.mu0_hat
    assert abs(lhs - np.mean(dy)) < 1e-12 * max(abs(np.mean(dy)), 1.0)


def test_outcome_affine_equivariance_uniform_full_bandwidth():
    rng = np.random.default_rng(1)
    d = rng.random(150)
    dy = 2 * d + 0.3 * rng.standard_normal(150)
    bw = _full_span_bw(d)
    base = estimate_was(DifferencedSample(dy, d, 1, 2), kernel=UNI, bw=bw)
    a, c = 3.5, -2.0
    moved = estimate_was(DifferencedSample(a * dy + c, d, 1, 2), kernel=UNI, bw=bw)
    assert abs(moved.beta - a * base.beta) < 1e-10 * (1 + abs(base.beta))


def test_ci_level_monotonicity():
    rng = np.random.default_rng(2)
    d = rng.random(300)
    dy = d + d * d + rng.standard_normal(300)
    s = DifferencedSample(dy=dy, d=d, base_period=1, target_period=2)
    e95 = estimate_was(s, alpha=0.05)
    e99 = estimate_was(s, alpha=0.01)
    assert e99.ci_low <= e95.ci_low <= e95.ci_high <= e99.ci_high


def test_bias_corrected_center_inside_interval():
    rng = np.random.default_rng(3)
    d = rng.random(250)
    dy = d + 2 * d * d + rng.standard_normal(250)
    est = estimate_was(DifferencedSample(dy, d, 1, 2))
    center = est.beta + est.bias_hat
    assert est.ci_low <= center <= est.ci_high
    assert est.var_hat >= 0


def test_shifted_equals_manual_shift():
    rng = np.random.default_rng(4)
    d = 0.4 + rng.random(200)
    dy = 1.5 * d + 0.2 * rng.standard_normal(200)
    s = DifferencedSample(dy=dy, d=d, base_period=1, target_period=2)
    shifted = estimate_shifted(s)
    manual = estimate_was(
        DifferencedSample(dy=dy, d=d - d.min(), base_period=1, target_period=2)
    )
    assert shifted.beta == manual.beta
    assert shifted.ci_low == manual.ci_low
    assert shifted.boundary == pytest.approx(float(d.min()))
    assert shifted.mode == "shifted"


def test_shifted_noiseless_slope():
    d = np.linspace(0.5, 2.0, 120)
    dy = 2.0 * (d - d.min())
    est = estimate_shifted(DifferencedSample(dy=dy, d=d, base_period=1, target_period=2))
    assert abs(est.beta - 2.0) < 1e-6


def test_translation_oracle():
    # doses translated by +0.3: identical arithmetic on the shifted values
    rng = np.random.default_rng(5)
    d = rng.random(400)
    d[0] = 0.0  # pin the minimum so the shift is exactly 0.3
    dy = d + d * d + rng.standard_normal(400)
    base = estimate_was(DifferencedSample(dy=dy, d=d, base_period=1, target_period=2))
    moved = estimate_shifted(
        DifferencedSample(dy=dy, d=d + 0.3, base_period=1, target_period=2)
    )
    assert abs(moved.beta - base.beta) < 1e-10
    assert abs(moved.ci_low - base.ci_low) < 1e-10
    assert abs(moved.ci_high - base.ci_high) < 1e-10


def test_shifted_requires_positive_doses():
    s = grid_sample(G=50, lo=0.0)
    with pytest.raises(InputError):
        estimate_shifted(s)


def test_mass_point_hand_example():
    s = DifferencedSample(
        dy=np.array([0.0, 2.0, 3.0, 5.0]),
        d=np.array([1.0, 1.0, 2.0, 3.0]),
        base_period=1,
        target_period=2,
    )
    est = estimate_mass_point(s)
    assert est.beta == pytest.approx(2.0, abs=1e-12)
    assert est.mode == "mass_point"
    assert est.boundary == 1.0


def test_mass_point_constant_dy_is_zero():
    s = DifferencedSample(
        dy=np.full(6, 3.3),
        d=np.array([1.0, 1.0, 1.5, 2.0, 2.5, 3.0]),
        base_period=1,
        target_period=2,
    )
    assert estimate_mass_point(s).beta == pytest.approx(0.0, abs=1e-12)


def test_mass_point_linear_case():
    d = np.array([1.0, 1.0, 1.3, 2.0, 2.6])
    c = -1.7
    s = DifferencedSample(dy=c * (d - 1.0), d=d, base_period=1, target_period=2)
    assert estimate_mass_point(s).beta == pytest.approx(c, abs=1e-12)


def test_mass_point_equals_instrument_ratio_oracle():
    rng = np.random.default_rng(6)
    for _ in range(25):
        n0, n1 = rng.integers(2, 10), rng.integers(2, 30)
        dmin = float(rng.random() + 0.1)
        d = np.concatenate([np.full(n0, dmin), dmin + rng.random(n1) + 0.01])
        dy = rng.standard_normal(n0 + n1)
        s = DifferencedSample(dy=dy, d=d, base_period=1, target_period=2)
        est = estimate_mass_point(s)
        z = (d > dmin).astype(float)
        oracle = np.cov(z, dy, ddof=1)[0, 1] / np.cov(z, d, ddof=1)[0, 1]
        assert abs(est.beta - oracle) < 1e-10 * max(1.0, abs(oracle))


def test_mass_point_requires_mass():
    s = DifferencedSample(
        dy=np.zeros(4), d=np.array([1.0, 1.5, 2.0, 3.0]), base_period=1, target_period=2
    )
    with pytest.raises(InputError, match="mass point"):
        estimate_mass_point(s)


def test_mass_tolerance_matches_near_ties():
    d = np.array([1.0, 1.0 + 1e-9, 2.0, 3.0])
    s = DifferencedSample(dy=np.array([0.0, 2.0, 3.0, 5.0]), d=d, base_period=1, target_period=2)
    with pytest.raises(InputError):
        estimate_mass_point(s)
    est = estimate_mass_point(s, mass_tol=1e-6)
    assert est.beta == pytest.approx(2.0, rel=1e-6)


def _event_panel(noisy=False):
    rng = np.random.default_rng(7)
    G = 40
    doses = rng.random(G) + 0.02
    lines = ["unit,time,outcome,dose"]
    for g in range(G):
        base = float(rng.standard_normal())
        for t in (1, 2, 3, 4):
            y = base if t < 3 else base + 1.2 * doses[g] * (t - 2)
            if noisy:
                y += 0.01 * float(rng.standard_normal())
            dose = doses[g] if t >= 3 else 0.0
            lines.append(f"u{g},{t},{float(y)!r},{float(dose)!r}")
    return load_panel(io.StringIO("\n".join(lines) + "\n"))


def test_event_study_pretrends_zero_noiseless():
    panel = _event_panel()
    results = event_study(panel)
    by_period = dict(results)
    assert set(by_period) == {1, 3, 4}
    assert abs(by_period[1].beta) < 1e-8


def test_event_study_single_post_equals_estimate_was():
    panel = _event_panel(noisy=True)
    results = dict(event_study(panel, horizons=[3], pre_periods=[]))
    from had import difference

    direct = estimate_was(difference(panel, 2, 3))
    assert results[3].beta == direct.beta
    assert results[3].ci_low == direct.ci_low


def test_alpha_validation():
    s = grid_sample()
    with pytest.raises(InputError):
        estimate_was(s, alpha=0.0)
    with pytest.raises(InputError):
        estimate_was(s, alpha=0.7)
