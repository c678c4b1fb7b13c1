"""Point estimation and bias-corrected inference for the dose-weighted average slope.

The estimand compares the mean outcome evolution of the whole sample to the
boundary value of E[dy | dose], scaled by the mean dose:

    beta = (mean(dy) - mu0) / mean(d),

with mu0 estimated by the intercept of a boundary local-linear fit. The
confidence interval recenters the estimate by a plug-in of the local-linear
smoothing bias (h^2 C m''(0)/2, with m'' from a local-quadratic fit at the
wider bandwidth b) and uses the variance of the bias-corrected boundary
estimator, built from nearest-neighbor residuals. The O(G^-1/2) randomness of
the two sample means is negligible next to the nonparametric term and is
ignored.

Three regimes share the machinery: `estimate_was` for designs whose dose
support reaches zero, `estimate_shifted` for strictly positive supports
(boundary moved to the sample minimum, which converges at rate G), and
`estimate_mass_point` for an atom at the minimum dose (a ratio of group
means, equivalent to two-stage least squares with an above-minimum indicator
instrument).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .bandwidth import BandwidthSelection, select_inference_bandwidth
from .errors import DegenerateDesignError, InputError
from .kernels import KernelSpec, make_kernel
from .localpoly import local_fit
from .panel import DifferencedSample, Panel, difference

__all__ = [
    "WasEstimate",
    "estimate_was",
    "estimate_shifted",
    "estimate_mass_point",
    "event_study",
    "nn_variance",
]

NN_NEIGHBORS = 3


@dataclass(frozen=True)
class WasEstimate:
    """Dose-weighted average-slope estimate with bias-corrected interval.

    Attributes
    ----------
    beta : float
        Point estimate (mean(dy) - mu0_hat) / mean(d).
    mu0_hat : float
        Boundary value of E[dy | dose].
    bias_hat : float
        Plug-in smoothing bias of beta's numerator, scaled by the mean dose;
        the interval is centered at beta + bias_hat.
    var_hat : float
        Variance of the bias-corrected numerator, scaled by the mean dose
        squared (so sqrt(var_hat) is beta's standard error).
    ci_low, ci_high : float
        Bias-corrected normal interval at level 1 - alpha.
    h_used, b_used : float
        Bandwidths of the local-linear and local-quadratic fits.
    n_eff : int
        Observations with positive weight in the local-linear window.
    boundary : float
        Dose value treated as the control boundary (0, or the minimum dose
        for the shifted estimand).
    mode : str
        "qug", "shifted", or "mass_point".
    """

    beta: float
    mu0_hat: float
    bias_hat: float
    var_hat: float
    ci_low: float
    ci_high: float
    alpha: float
    h_used: float
    b_used: float
    n_eff: int
    boundary: float
    mode: str
    g_count: int
    bandwidth_flags: tuple[str, ...] = ()

    @property
    def se(self) -> float:
        return math.sqrt(self.var_hat)


def nn_variance(d: np.ndarray, y: np.ndarray, neighbors: int = NN_NEIGHBORS) -> np.ndarray:
    """Nearest-neighbor conditional-variance estimates at each point.

    sigma2[i] = J/(J+1) * (y_i - mean of the J nearest y's by dose distance)^2.
    Avoids a third bandwidth; neighbors are located on the dose axis.
    """
    G = d.size
    J = min(neighbors, G - 1)
    if J < 1:
        raise DegenerateDesignError("variance estimation needs at least 2 observations")
    order = np.argsort(d, kind="stable")
    ds, ys = d[order], y[order]
    # candidate neighbors of each sorted point: J positions on either side
    cand_dist = np.full((G, 2 * J), np.inf)
    cand_y = np.zeros((G, 2 * J))
    for j in range(1, J + 1):
        cand_dist[j:, j - 1] = ds[j:] - ds[:-j]
        cand_y[j:, j - 1] = ys[:-j]
        cand_dist[:-j, J + j - 1] = ds[j:] - ds[:-j]
        cand_y[:-j, J + j - 1] = ys[j:]
    pick = np.argpartition(cand_dist, J - 1, axis=1)[:, :J]
    nn_mean = np.take_along_axis(cand_y, pick, axis=1).mean(axis=1)
    sig2_sorted = (J / (J + 1.0)) * (ys - nn_mean) ** 2
    sig2 = np.empty(G)
    sig2[order] = sig2_sorted
    return sig2


def _estimate_at_boundary(
    dy: np.ndarray,
    d: np.ndarray,
    kernel: KernelSpec,
    bw: BandwidthSelection,
    alpha: float,
    boundary: float,
    mode: str,
) -> WasEstimate:
    """Core computation on boundary-shifted doses (min(d) corresponds to 0)."""
    mean_d = float(np.mean(d))
    if mean_d <= 0:
        raise InputError("mean dose must be positive")
    h, b = bw.h_star, bw.b_star

    fit1 = local_fit(d, dy, kernel, h, p=1, boundary=0.0)
    fit2 = local_fit(d, dy, kernel, b, p=2, boundary=0.0)
    mu0 = fit1.point
    m2 = 2.0 * float(fit2.coefs[2])
    C = kernel.c_const
    bias_num = h * h * C * m2 / 2.0

    # bias-corrected boundary estimator is linear in dy; its variance sums
    # nearest-neighbor conditional variances over the combined windows
    a = fit1.influence[0] - h * h * C * fit2.influence[2]
    sig2 = nn_variance(d, dy)
    var_num = float(a @ (a * sig2))

    beta = (float(np.mean(dy)) - mu0) / mean_d
    bias_hat = bias_num / mean_d
    var_hat = var_num / mean_d**2
    z = float(norm.ppf(1.0 - alpha / 2.0))
    center = beta + bias_hat
    half = z * math.sqrt(var_hat)
    return WasEstimate(
        beta=beta,
        mu0_hat=mu0,
        bias_hat=bias_hat,
        var_hat=var_hat,
        ci_low=center - half,
        ci_high=center + half,
        alpha=alpha,
        h_used=h,
        b_used=b,
        n_eff=fit1.n_eff,
        boundary=boundary,
        mode=mode,
        g_count=d.size,
        bandwidth_flags=bw.flags,
    )


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 0.5:
        raise InputError(f"alpha must be in (0, 0.5], got {alpha}")


def estimate_was(
    sample: DifferencedSample,
    kernel: KernelSpec | None = None,
    bw: BandwidthSelection | None = None,
    alpha: float = 0.05,
) -> WasEstimate:
    """Estimate the dose-weighted average slope with the zero-dose boundary.

    Assumes the dose support reaches zero (run the quasi-untreated-group test
    first). Pass `bw` to reuse or override the data-driven bandwidths.
    """
    _check_alpha(alpha)
    kernel = kernel or make_kernel()
    if bw is None:
        bw = select_inference_bandwidth(sample.d, sample.dy, kernel)
    return _estimate_at_boundary(sample.dy, sample.d, kernel, bw, alpha, 0.0, "qug")


def estimate_shifted(
    sample: DifferencedSample,
    kernel: KernelSpec | None = None,
    bw: BandwidthSelection | None = None,
    alpha: float = 0.05,
) -> WasEstimate:
    """Estimate the lowest-dose-relative slope when no dose is near zero.

    Moves the boundary to the sample minimum dose and rescales by the mean
    excess dose. Identifies the actual-versus-lowest-dose weighted slope under
    an equal-lowest-dose-effect condition, and the sign of the zero-based
    estimand under a bounded-heterogeneity condition. The minimum converges at
    rate G, so its randomness is negligible at the nonparametric rate.
    """
    _check_alpha(alpha)
    if sample.d.min() <= 0:
        raise InputError(
            "shifted estimation expects strictly positive doses; "
            "use estimate_was when zero is in the dose support"
        )
    kernel = kernel or make_kernel()
    boundary = float(sample.d.min())
    shifted = sample.d - boundary
    if bw is None:
        bw = select_inference_bandwidth(shifted, sample.dy, kernel)
    est = _estimate_at_boundary(sample.dy, shifted, kernel, bw, alpha, boundary, "shifted")
    return est


def estimate_mass_point(
    sample: DifferencedSample,
    alpha: float = 0.05,
    mass_tol: float = 0.0,
) -> WasEstimate:
    """Ratio estimator when the minimum dose is an atom.

    beta = [mean(dy | d > dmin) - mean(dy | d = dmin)] / [mean(d | d > dmin) - dmin],
    the two-stage coefficient with the above-minimum indicator as instrument.
    Doses equal to the minimum are matched exactly by default; `mass_tol` is a
    relative tolerance for doses produced by upstream computation.
    """
    _check_alpha(alpha)
    d, dy = sample.d, sample.dy
    dmin = float(d.min())
    at = d <= dmin * (1.0 + mass_tol) if mass_tol > 0 else d == dmin
    above = ~at
    n0, n1 = int(at.sum()), int(above.sum())
    if n0 < 2:
        raise InputError(
            "no mass point at the minimum dose (fewer than 2 units there); "
            "use estimate_shifted for continuously distributed doses"
        )
    if n1 < 2:
        raise InputError("fewer than 2 units above the minimum dose")

    mean_at = float(dy[at].mean())
    mean_above = float(dy[above].mean())
    mean_d_above = float(d[above].mean())
    denom = mean_d_above - dmin
    beta = (mean_above - mean_at) / denom

    # delta method over the three group means; the above-minimum outcome and
    # dose means share units, hence the covariance term
    var_above = float(np.var(dy[above], ddof=1)) / n1
    var_at = float(np.var(dy[at], ddof=1)) / n0
    var_d = float(np.var(d[above], ddof=1)) / n1
    cov_yd = float(np.cov(dy[above], d[above], ddof=1)[0, 1]) / n1
    var_hat = (var_above + var_at + beta**2 * var_d - 2.0 * beta * cov_yd) / denom**2
    var_hat = max(var_hat, 0.0)

    z = float(norm.ppf(1.0 - alpha / 2.0))
    half = z * math.sqrt(var_hat)
    return WasEstimate(
        beta=beta,
        mu0_hat=mean_at,
        bias_hat=0.0,
        var_hat=var_hat,
        ci_low=beta - half,
        ci_high=beta + half,
        alpha=alpha,
        h_used=float("nan"),
        b_used=float("nan"),
        n_eff=sample.g_count,
        boundary=dmin,
        mode="mass_point",
        g_count=sample.g_count,
    )


def event_study(
    panel: Panel,
    kernel: KernelSpec | None = None,
    alpha: float = 0.05,
    horizons: list[int] | None = None,
    pre_periods: list[int] | None = None,
    mode: str = "qug",
) -> list[tuple[int, WasEstimate]]:
    """Per-period estimates against the last pre-treatment period.

    Post periods t >= F use dy = Y[t] - Y[F-1]; pre periods t < F - 1 are
    placebo estimates on untreated evolutions against the future dose
    (expected zero under parallel trends). Bandwidths are selected
    independently for each period.
    """
    f = panel.treatment_period
    base = int(panel.pre_periods[-1]) if panel.pre_periods.size else None
    if base is None:
        raise InputError("panel has no pre-treatment period to difference against")
    if horizons is None:
        horizons = [int(t) for t in panel.post_periods]
    if pre_periods is None:
        pre_periods = [int(t) for t in panel.periods if t < base]

    estimators = {
        "qug": estimate_was,
        "shifted": estimate_shifted,
        "mass": estimate_mass_point,
        "mass_point": estimate_mass_point,
    }
    if mode not in estimators:
        raise InputError(f"unknown event-study mode {mode!r}")

    out: list[tuple[int, WasEstimate]] = []
    for t in sorted(pre_periods) + sorted(horizons):
        if t == base:
            continue
        sample = difference(panel, base, t)
        if mode in ("mass", "mass_point"):
            est = estimate_mass_point(sample, alpha=alpha)
        else:
            est = estimators[mode](sample, kernel=kernel, alpha=alpha)
        out.append((t, est))
    return out
