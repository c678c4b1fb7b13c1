"""Tests of linearity of E[dy | dose] and of mean-independence for pre-trends.

Linearity of the conditional outcome evolution is what makes the two-way
fixed-effects slope interpretable, so it gets three tests:

* the cusum test: running sums of regression residuals sorted by dose,
  aggregated Cramer-von-Mises style, with a wild-bootstrap p-value
  (consistent against any fixed alternative, power at the G^-1/2 rate);
* a heteroskedasticity-robust variance-contrast test comparing the linear
  residual variance to a first-difference variance estimate after sorting by
  dose (O(G), asymptotically standard normal, no bootstrap);
* an exact polynomial Wald test when the dose takes few distinct values.

Mean-independence variants replace the linear-fit residuals by deviations
from the grand mean, for placebo tests of untreated evolutions against the
future dose.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, norm

from .errors import DegenerateDesignError, InputError
from .panel import Panel, detrended_difference, difference

__all__ = [
    "StuteReport",
    "YatchewReport",
    "PolyReport",
    "stute_statistic",
    "stute_test",
    "stute_joint",
    "stute_covariates",
    "yatchew_test",
    "poly_test_discrete",
]

BOOTSTRAP_BLOCK = 64
_U64 = (1 << 64) - 1

# two-point multiplier law: mean 0, second and third moments 1
_ETA_HI = (1.0 + np.sqrt(5.0)) / 2.0
_ETA_LO = (1.0 - np.sqrt(5.0)) / 2.0
_P_HI = (np.sqrt(5.0) - 1.0) / (2.0 * np.sqrt(5.0))

MODES = ("linearity", "mean_independence")


@dataclass(frozen=True)
class StuteReport:
    """Cusum test outcome; for joint tests, per-period components included."""

    S: float
    p_value: float
    B: int
    seed: int
    mode: str
    periods: tuple[int, ...] = ()
    per_period_S: tuple[float, ...] = ()


@dataclass(frozen=True)
class YatchewReport:
    """Variance-contrast test outcome.

    T_hr = sqrt(G) (sig2_lin - sig2_diff) / sqrt(sigW4_hat); one-sided upper
    normal p-value. When every residual is zero the fit is exactly linear and
    the report is degenerate (p-value 1, T_hr -inf).
    """

    sig2_lin: float
    sig2_diff: float
    sigW4_hat: float
    T_hr: float
    p_value: float
    G: int

    @property
    def degenerate(self) -> bool:
        return self.sigW4_hat == 0.0


@dataclass(frozen=True)
class PolyReport:
    """Wald test outcome for discrete doses."""

    statistic: float
    p_value: float
    df: int
    k_values: int
    mode: str
    G: int


def _sort_order(d: np.ndarray) -> np.ndarray:
    """Order by dose, exact ties broken by original index (stable)."""
    return np.argsort(d, kind="stable")


def _residual_problem(d: np.ndarray, y: np.ndarray, mode: str):
    """Design matrix, fitted values and residuals under the null."""
    if mode == "linearity":
        if np.ptp(d) <= 1e-12 * max(1.0, float(np.max(np.abs(d)))):
            raise DegenerateDesignError("constant dose: linear regression is degenerate")
        X = np.column_stack([np.ones_like(d), d])
    elif mode == "mean_independence":
        X = np.ones((d.size, 1))
    else:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    Q, _ = np.linalg.qr(X)
    fitted = Q @ (Q.T @ y)
    return Q, fitted, y - fitted


def _exact_fit(eps: np.ndarray, y: np.ndarray) -> bool:
    """True when residuals are float noise around an exact fit."""
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    return float(np.max(np.abs(eps))) <= 1e-12 * max(scale, 1.0)


def _cusum_stat(eps_sorted: np.ndarray) -> float:
    """S = (1/G^2) * sum of squared cumulative residual sums."""
    c = np.cumsum(eps_sorted, axis=0)
    return float(np.sum(c * c, axis=0) / eps_sorted.shape[0] ** 2)


def stute_statistic(d: np.ndarray, y: np.ndarray, mode: str = "linearity"):
    """Cusum statistic and the residuals it was built from.

    Residuals come from OLS of y on (1, d) in linearity mode, or from a
    constant-only regression in mean-independence mode.
    """
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise InputError("d and y must be 1-d arrays of equal length")
    if d.size < 10:
        raise InputError(f"cusum test needs at least 10 observations, got {d.size}")
    _, _, eps = _residual_problem(d, y, mode)
    order = _sort_order(d)
    return _cusum_stat(eps[order]), eps


def _multiplier_block(seed: int, draws: range, G: int, order: np.ndarray) -> np.ndarray:
    """G x len(draws) multipliers; column b depends only on (seed, b).

    Multipliers are generated along the dose-sorted positions and mapped back
    to input rows, so the p-value is invariant to input row order (up to the
    stable-sort tie rule).
    """
    out = np.empty((G, len(draws)))
    for j, b in enumerate(draws):
        key = np.array([seed & _U64, b & _U64], dtype=np.uint64)
        u = np.random.Generator(np.random.Philox(key=key)).random(G)
        out[order, j] = np.where(u < _P_HI, _ETA_HI, _ETA_LO)
    return out


def _bootstrap_pvalue(stat, problems, B, seed, block):
    """Shared wild bootstrap over one or more residual problems.

    `problems` is a list of (Q, fitted, eps, order) tuples whose statistics
    are summed per draw; a single multiplier vector per unit is reused across
    problems within a draw, preserving cross-period dependence. Draws use
    counter-based streams keyed by (seed, draw index), so p-values do not
    depend on block size or evaluation order.

    The p-value counts draws with S* >= S: for continuous data ties have
    probability zero, and an exact fit (all residuals zero) then reports
    p = 1 rather than spuriously rejecting.
    """
    G = problems[0][1].size
    order0 = problems[0][3]
    exceed = 0
    for start in range(0, B, block):
        draws = range(start, min(start + block, B))
        eta = _multiplier_block(seed, draws, G, order0)
        total = np.zeros(len(draws))
        for Q, fitted, eps, order in problems:
            ystar = fitted[:, None] + eta * eps[:, None]
            estar = ystar - Q @ (Q.T @ ystar)
            c = np.cumsum(estar[order], axis=0)
            total += np.sum(c * c, axis=0) / G**2
        exceed += int(np.count_nonzero(total >= stat))
    return exceed / B


def stute_test(
    d: np.ndarray,
    y: np.ndarray,
    mode: str = "linearity",
    B: int = 500,
    seed: int = 0,
    block: int = BOOTSTRAP_BLOCK,
) -> StuteReport:
    """Cusum test with wild-bootstrap p-value, deterministic given the seed."""
    if B < 99:
        raise InputError(f"need at least 99 bootstrap draws, got {B}")
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    S, _ = stute_statistic(d, y, mode)
    Q, fitted, eps = _residual_problem(d, y, mode)[:3]
    if _exact_fit(eps, y):
        return StuteReport(S=S, p_value=1.0, B=B, seed=seed, mode=mode)
    order = _sort_order(d)
    p = _bootstrap_pvalue(S, [(Q, fitted, eps, order)], B, seed, block)
    return StuteReport(S=S, p_value=p, B=B, seed=seed, mode=mode)


def stute_joint(
    panel: Panel,
    periods: list[int],
    mode: str = "linearity",
    B: int = 500,
    seed: int = 0,
    detrend: bool = False,
    base_pair: tuple[int, int] | None = None,
    block: int = BOOTSTRAP_BLOCK,
) -> StuteReport:
    """Joint cusum test across several target periods.

    Each period contributes the statistic of its own residual set (outcomes
    differenced against the last pre-treatment period, or deviations from
    unit-specific linear trends when `detrend` is set); the joint statistic is
    their sum, and the bootstrap reuses one multiplier per unit across periods
    within each draw so the cross-period dependence is preserved.
    """
    if B < 99:
        raise InputError(f"need at least 99 bootstrap draws, got {B}")
    if not periods:
        raise InputError("need at least one target period")
    f = panel.treatment_period
    pre = panel.pre_periods
    if pre.size == 0:
        raise InputError("panel has no pre-treatment period")
    base = int(pre[-1])
    if detrend and base_pair is None:
        if pre.size < 2:
            raise InputError("linear-trend adjustment needs at least 2 pre-periods")
        base_pair = (int(pre[-1]), int(pre[-2]))

    problems = []
    per_s = []
    order = _sort_order(panel.dose)
    for t in periods:
        if detrend:
            sample = detrended_difference(panel, base_pair, int(t))
        else:
            sample = difference(panel, base, int(t))
        Q, fitted, eps = _residual_problem(sample.d, sample.dy, mode)
        problems.append((Q, fitted, eps, order))
        per_s.append(_cusum_stat(eps[order]))

    S = float(sum(per_s))
    if all(_exact_fit(pr[2], pr[1] + pr[2]) for pr in problems):
        return StuteReport(
            S=S,
            p_value=1.0,
            B=B,
            seed=seed,
            mode=mode,
            periods=tuple(int(t) for t in periods),
            per_period_S=tuple(per_s),
        )
    p = _bootstrap_pvalue(S, problems, B, seed, block)
    return StuteReport(
        S=S,
        p_value=p,
        B=B,
        seed=seed,
        mode=mode,
        periods=tuple(int(t) for t in periods),
        per_period_S=tuple(per_s),
    )


def _indicator_matrix(d: np.ndarray, x: np.ndarray) -> np.ndarray:
    """IND[g, h] = 1{d_h <= d_g (index tie-break), x_h <= x_g componentwise}.

    The dose coordinate uses the same tie rule as the stable sort, so with an
    intercept-only x this reduces exactly to the sorted cusum statistic.
    Constant columns (the intercept) impose no restriction.
    """
    idx = np.arange(d.size)
    ind = (d[None, :] < d[:, None]) | ((d[None, :] == d[:, None]) & (idx[None, :] <= idx[:, None]))
    for j in range(x.shape[1]):
        col = x[:, j]
        if np.ptp(col) == 0.0:
            continue
        ind &= col[None, :] <= col[:, None]
    return ind.astype(float)


def stute_covariates(
    d: np.ndarray,
    y: np.ndarray,
    x: np.ndarray,
    B: int = 500,
    seed: int = 0,
    block: int = BOOTSTRAP_BLOCK,
) -> StuteReport:
    """Cusum test of E[dy | dose, x] = x'gamma + dose * x'delta.

    `x` must include an intercept column. Residuals come from OLS of y on
    (x, d*x); the cusum indicators are joint half-plane indicators over the
    dose and each nonconstant covariate. Memory is O(G^2).
    """
    if B < 99:
        raise InputError(f"need at least 99 bootstrap draws, got {B}")
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != d.size:
        raise InputError("x must be (G, k) aligned with d")
    if not any(np.ptp(x[:, j]) == 0.0 and x[0, j] != 0.0 for j in range(x.shape[1])):
        raise InputError("x must include an intercept column")

    W = np.column_stack([x, d[:, None] * x])
    Q, R = np.linalg.qr(W)
    rdiag = np.abs(np.diag(R))
    if rdiag.min() == 0 or rdiag.max() / rdiag.min() > 1e10:
        raise DegenerateDesignError("collinear design in (x, d*x)")
    fitted = Q @ (Q.T @ y)
    eps = y - fitted

    ind = _indicator_matrix(d, x)
    G = d.size
    S = float(np.sum((ind @ eps) ** 2) / G**2)
    if _exact_fit(eps, y):
        return StuteReport(S=S, p_value=1.0, B=B, seed=seed, mode="linearity")

    order = _sort_order(d)
    exceed = 0
    for start in range(0, B, block):
        draws = range(start, min(start + block, B))
        eta = _multiplier_block(seed, draws, G, order)
        ystar = fitted[:, None] + eta * eps[:, None]
        estar = ystar - Q @ (Q.T @ ystar)
        sstar = np.sum((ind @ estar) ** 2, axis=0) / G**2
        exceed += int(np.count_nonzero(sstar >= S))
    return StuteReport(S=S, p_value=exceed / B, B=B, seed=seed, mode="linearity")


def yatchew_test(d: np.ndarray, y: np.ndarray, alpha: float = 0.05) -> YatchewReport:
    """Heteroskedasticity-robust variance-contrast linearity test.

    Runs in O(G log G) with no bootstrap, so it remains practical when the
    cusum bootstrap's G x B working set does not. The linear residual
    variance is degrees-of-freedom corrected, which centers the statistic's
    null distribution at moderate G.
    """
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise InputError("d and y must be 1-d arrays of equal length")
    G = d.size
    if G < 3:
        raise InputError(f"variance-contrast test needs at least 3 observations, got {G}")
    if G < 20:
        warnings.warn(
            f"G = {G} is very small; the normal approximation behind this "
            "test is an asymptotic one",
            stacklevel=2,
        )
    _, _, eps = _residual_problem(d, y, "linearity")

    order = _sort_order(d)
    ys = y[order]
    eps_s = eps[order]
    sig2_diff = float(np.sum(np.diff(ys) ** 2) / (2.0 * G))
    sig2_lin = float(eps @ eps / max(G - 2, 1))
    sigw4 = float(np.sum(eps_s[1:] ** 2 * eps_s[:-1] ** 2) / (G - 1))

    if sigw4 == 0.0 or _exact_fit(eps, y):
        return YatchewReport(sig2_lin, sig2_diff, 0.0, float("-inf"), 1.0, G)
    t_hr = float(np.sqrt(G) * (sig2_lin - sig2_diff) / np.sqrt(sigw4))
    return YatchewReport(sig2_lin, sig2_diff, sigw4, t_hr, float(norm.sf(t_hr)), G)


def poly_test_discrete(d: np.ndarray, y: np.ndarray, mode: str = "linearity") -> PolyReport:
    """Exact polynomial Wald test when the dose takes K distinct values.

    Saturates E[dy | dose] with powers 1..K-1 of the standardized dose and
    tests, with a heteroskedasticity-robust covariance, that the coefficients
    beyond the linear term vanish (linearity) or that all dose terms vanish
    (mean independence). With K = 2 a linear fit is saturated, so there is
    nothing to test in linearity mode.
    """
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise InputError("d and y must be 1-d arrays of equal length")
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    values = np.unique(d)
    K = values.size
    if K > 20:
        raise InputError(f"dose takes {K} > 20 values; treat it as continuous")
    if mode == "linearity":
        if K == 2:
            raise InputError(
                "dose takes only 2 values: a linear fit is saturated and "
                "linearity has no room for testability"
            )
        if K < 3:
            raise InputError("linearity test needs at least 3 distinct doses")
        first_tested = 2
    else:
        if K < 2:
            raise InputError("mean-independence test needs at least 2 distinct doses")
        first_tested = 1

    G = d.size
    z = (d - d.mean()) / d.std()
    X = np.vander(z, N=K, increasing=True)
    norms = np.linalg.norm(X, axis=0)
    Xs = X / norms
    Q, R = np.linalg.qr(Xs)
    rdiag = np.abs(np.diag(R))
    if rdiag.min() == 0 or rdiag.max() / rdiag.min() > 1e10:
        raise DegenerateDesignError(
            "near-singular polynomial design; dose levels are too unbalanced"
        )
    beta = np.linalg.solve(R, Q.T @ y)
    eps = y - Xs @ beta
    df = K - first_tested

    if _exact_fit(eps, y):
        # the saturated fit is exact: test the restricted coefficients directly
        scale = float(np.max(np.abs(beta))) or 1.0
        if np.max(np.abs(beta[first_tested:])) <= 1e-10 * scale:
            return PolyReport(0.0, 1.0, df, int(K), mode, G)
        raise DegenerateDesignError(
            "outcomes fit the polynomial exactly but nonlinearly: no residual "
            "variation to test against"
        )

    XtXi = np.linalg.inv(R.T @ R)
    meat = (Xs * eps[:, None] ** 2).T @ Xs
    V = XtXi @ meat @ XtXi * G / max(G - K, 1)

    r = beta[first_tested:]
    Vr = V[first_tested:, first_tested:]
    stat = float(r @ np.linalg.pinv(Vr) @ r)
    return PolyReport(
        statistic=stat,
        p_value=float(chi2.sf(stat, df)),
        df=df,
        k_values=int(K),
        mode=mode,
        G=G,
    )
