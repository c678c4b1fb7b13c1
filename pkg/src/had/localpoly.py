"""Weighted local-polynomial regression at the left boundary of the dose support.

Fits y on a polynomial basis in (d - boundary), weighting observations by
k((d - boundary)/h)/h for a one-sided kernel k. The intercept estimates the
boundary value of m(.) = E[y | d = .]; higher coefficients estimate scaled
derivatives (the quadratic coefficient is m''(boundary)/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesignError, InputError
from .kernels import KernelSpec

__all__ = ["LocalFit", "local_fit"]

# relative condition number above which the weighted design is rejected;
# quasi-untreated clusters at tiny h can be near-collinear
COND_LIMIT = 1e10


@dataclass(frozen=True)
class LocalFit:
    """Result of a boundary local-polynomial fit.

    Attributes
    ----------
    point : float
        Boundary value estimate (the intercept).
    coefs : np.ndarray
        Intercept, slope, ... up to order p, in powers of (d - boundary).
    h : float
        Bandwidth, in dose units.
    p : int
        Polynomial order.
    n_eff : int
        Observations with strictly positive kernel weight.
    residuals : np.ndarray
        y - fitted, full input length (zero-weight rows included).
    weights : np.ndarray
        Kernel weights k(u/h)/h, full input length.
    influence : np.ndarray
        (p+1, G) linear map: coefs = influence @ y. Rows give each
        coefficient's weights on the raw outcomes; used for plug-in
        variance of linear functionals of the fit.
    """

    point: float
    coefs: np.ndarray
    h: float
    p: int
    n_eff: int
    residuals: np.ndarray
    weights: np.ndarray
    influence: np.ndarray


def local_fit(
    d: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec,
    h: float,
    p: int = 1,
    boundary: float = 0.0,
) -> LocalFit:
    """Weighted least squares of y on powers of (d - boundary) near the boundary.

    Requires h > 0, p in {1, 2, 3}, and at least p + 2 observations with
    positive kernel weight (one more than the parameter count, so a residual
    variance is always defined downstream).
    """
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise InputError("d and y must be 1-d arrays of equal length")
    if not h > 0:
        raise InputError(f"bandwidth must be positive, got {h}")
    if p not in (1, 2, 3):
        raise InputError(f"polynomial order must be 1, 2 or 3, got {p}")

    u = d - boundary
    w = kernel.k(u / h) / h
    w[u < 0] = 0.0
    n_eff = int(np.count_nonzero(w > 0))
    if n_eff < p + 2:
        raise DegenerateDesignError(
            f"need at least {p + 2} observations with positive weight in "
            f"[{boundary}, {boundary + h}], found {n_eff}"
        )

    mask = w > 0
    um, wm = u[mask], w[mask]
    sw = np.sqrt(wm)
    # columns scaled to unit norm before QR so the condition check is relative
    X = np.vander(um, N=p + 1, increasing=True)
    Xw = X * sw[:, None]
    norms = np.linalg.norm(Xw, axis=0)
    if np.any(norms == 0):
        raise DegenerateDesignError("zero design column: all in-window doses at boundary")
    Q, R = np.linalg.qr(Xw / norms)
    rdiag = np.abs(np.diag(R))
    if rdiag.min() == 0 or rdiag.max() / rdiag.min() > COND_LIMIT:
        raise DegenerateDesignError(
            "near-singular local design (condition number above "
            f"{COND_LIMIT:.0e}); widen the bandwidth"
        )
    yw = y[mask] * sw
    coefs = np.linalg.solve(R, Q.T @ yw) / norms

    # influence rows: coefs = A y with A = N^-1 R^-1 Q' diag(sqrt w)
    A_mask = np.linalg.solve(R, Q.T) * sw[None, :] / norms[:, None]
    influence = np.zeros((p + 1, d.size))
    influence[:, mask] = A_mask

    fitted = np.vander(u, N=p + 1, increasing=True) @ coefs
    residuals = y - fitted
    return LocalFit(
        point=float(coefs[0]),
        coefs=coefs,
        h=float(h),
        p=p,
        n_eff=n_eff,
        residuals=residuals,
        weights=w,
        influence=influence,
    )
