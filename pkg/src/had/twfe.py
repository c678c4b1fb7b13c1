"""Two-way fixed-effects estimation on first differences, with diagnostics.

With two periods and a zero baseline dose, the TWFE coefficient equals the
OLS slope of the outcome change on the dose. Inference uses HC2 variance with
the Satterthwaite / effective degrees-of-freedom adjustment computed under a
homoskedastic reference model, which keeps t-intervals honest at small G.

The weight report decomposes the TWFE probability limit as a weighted sum of
conditional average slopes with weights proportional to (d - mean(d)) * d;
negative weights flag specifications where heterogeneous effects can bias the
slope. Linear-trend variants regress deviations from unit-specific linear
trends, and the covariate-interacted regression recovers an average slope
when effects are linear in covariates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, t as student_t

from .errors import DegenerateDesignError, InputError
from .panel import DifferencedSample, Panel, detrended_difference

__all__ = [
    "TwfeEstimate",
    "WeightReport",
    "CovariateSlopes",
    "twfe_fit",
    "twfe_weights",
    "twfe_linear_trends",
    "twfe_covariates",
]


@dataclass(frozen=True)
class TwfeEstimate:
    """OLS slope of dy on the dose with small-sample robust inference."""

    beta_fe: float
    beta0: float
    se: float
    ci_low: float
    ci_high: float
    dof: float
    alpha: float
    G: int


@dataclass(frozen=True)
class WeightReport:
    """Decomposition weights attached to each unit's conditional slope."""

    weights: np.ndarray
    n_positive: int
    n_negative: int
    negative_sum: float


@dataclass(frozen=True)
class CovariateSlopes:
    """Coefficients on dose-covariate interactions and the implied average slope."""

    delta_hat: np.ndarray
    as_hat: float
    se: float
    ci_low: float
    ci_high: float
    alpha: float
    G: int


def _hc2_slope_inference(X: np.ndarray, y: np.ndarray, alpha: float, coef_index: int = 1):
    """OLS with HC2 variance and effective dof for one coefficient.

    The dof is Satterthwaite's approximation for the HC2 variance estimator of
    the chosen coefficient under a homoskedastic reference: both traces of the
    underlying quadratic form are computed in O(G k^2) without materializing
    any G x G matrix.
    """
    G, k = X.shape
    Q_, R_ = np.linalg.qr(X)
    rdiag = np.abs(np.diag(R_))
    if rdiag.min() == 0 or rdiag.max() / rdiag.min() > 1e10:
        raise DegenerateDesignError("degenerate regression design")
    beta = np.linalg.solve(R_, Q_.T @ y)
    eps = y - X @ beta

    XtXi = np.linalg.inv(R_.T @ R_)
    lev = np.einsum("gi,ij,gj->g", X, XtXi, X)
    lev = np.clip(lev, 0.0, 1.0 - 1e-12)
    c = (XtXi @ X.T)[coef_index]
    var = float(np.sum(c**2 * eps**2 / (1.0 - lev)))

    a = c**2 / (1.0 - lev)
    tr1 = float(np.sum(c**2))
    S_a = (X * a[:, None]).T @ X
    QS = XtXi @ S_a
    tr2 = float(np.sum(a**2 * (1.0 - 2.0 * lev)) + np.trace(QS @ QS))
    dof = tr1**2 / tr2 if tr2 > 0 else float(G - k)

    se = math.sqrt(max(var, 0.0))
    q = float(student_t.ppf(1.0 - alpha / 2.0, max(dof, 1.0)))
    return beta, se, dof, q


def twfe_fit(sample: DifferencedSample, alpha: float = 0.05) -> TwfeEstimate:
    """OLS of dy on (1, d) with HC2 / effective-dof t-interval."""
    d, dy = sample.d, sample.dy
    if np.ptp(d) <= 1e-12 * max(1.0, float(np.max(np.abs(d)))):
        raise DegenerateDesignError("dose has zero variance; slope is undefined")
    X = np.column_stack([np.ones_like(d), d])
    beta, se, dof, q = _hc2_slope_inference(X, dy, alpha)
    return TwfeEstimate(
        beta_fe=float(beta[1]),
        beta0=float(beta[0]),
        se=se,
        ci_low=float(beta[1]) - q * se,
        ci_high=float(beta[1]) + q * se,
        dof=dof,
        alpha=alpha,
        G=d.size,
    )


def twfe_weights(d: np.ndarray) -> WeightReport:
    """Per-unit weights w_g proportional to (d_g - mean(d)) * d_g, summing to 1.

    Units with doses strictly between zero and the mean receive negative
    weight, so heterogeneous slopes can push the TWFE coefficient outside the
    convex hull of unit effects.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise InputError("need a 1-d dose vector with at least 2 entries")
    if np.ptp(d) <= 1e-12 * max(1.0, float(np.max(np.abs(d)))):
        raise DegenerateDesignError("dose has zero variance; weights are undefined")
    raw = (d - d.mean()) * d
    w = raw / raw.sum()
    return WeightReport(
        weights=w,
        n_positive=int(np.count_nonzero(w > 0)),
        n_negative=int(np.count_nonzero(w < 0)),
        negative_sum=float(w[w < 0].sum()),
    )


def twfe_linear_trends(
    panel: Panel,
    base_pair: tuple[int, int] | None = None,
    target: int | None = None,
    alpha: float = 0.05,
) -> TwfeEstimate:
    """TWFE on deviations from unit-specific linear trends.

    `base_pair` (later, earlier) supplies the per-unit trend slope and
    defaults to the last two pre-treatment periods; `target` defaults to the
    treatment period. Pre-trend placebos (targets before the pair) need a
    third pre-period to be informative, since the pair's own periods are
    mechanically zero.
    """
    pre = panel.pre_periods
    if base_pair is None:
        if pre.size < 2:
            raise InputError("linear-trend adjustment needs at least 2 pre-periods")
        base_pair = (int(pre[-1]), int(pre[-2]))
    if target is None:
        target = int(panel.treatment_period)
    sample = detrended_difference(panel, base_pair, target)
    return twfe_fit(sample, alpha=alpha)


def twfe_covariates(sample: DifferencedSample, alpha: float = 0.05) -> CovariateSlopes:
    """OLS of dy on (X, d*X) with X = (1, covariates); average-slope summary.

    delta_hat holds the coefficients on the dose interactions (constant term
    first); as_hat = mean(X)' delta_hat estimates the average slope when
    effects are linear in X. The standard error comes from the joint
    influence function of the OLS block and the covariate means.
    """
    d, dy = sample.d, sample.dy
    G = d.size
    if sample.x is None:
        X = np.ones((G, 1))
    else:
        X = np.column_stack([np.ones(G), sample.x])
    k = X.shape[1]
    W = np.column_stack([X, d[:, None] * X])
    Q_, R_ = np.linalg.qr(W)
    rdiag = np.abs(np.diag(R_))
    if rdiag.min() == 0 or rdiag.max() / rdiag.min() > 1e10:
        raise DegenerateDesignError("rank-deficient design in (x, d*x)")
    beta = np.linalg.solve(R_, Q_.T @ dy)
    eps = dy - W @ beta
    delta = beta[k:]

    xbar = X.mean(axis=0)
    as_hat = float(xbar @ delta)

    WtWi = np.linalg.inv(R_.T @ R_)
    infl_beta = G * (WtWi @ W.T) * eps[None, :]
    psi = xbar @ infl_beta[k:, :] + (X - xbar) @ delta
    se = float(np.sqrt(np.sum(psi**2)) / G)
    z = float(norm.ppf(1.0 - alpha / 2.0))
    return CovariateSlopes(
        delta_hat=delta,
        as_hat=as_hat,
        se=se,
        ci_low=as_hat - z * se,
        ci_high=as_hat + z * se,
        alpha=alpha,
        G=G,
    )
