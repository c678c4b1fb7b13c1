"""Tuning-parameter-free test for a quasi-untreated group.

Tests whether the infimum of the dose support is zero using the two smallest
distinct doses: T = D(1) / (D(2) - D(1)). Under the null the gap between the
minimum and zero behaves like the gap between the first two order statistics,
and T converges to a ratio of independent unit exponentials, whose survival
function at t is 1/(1+t). The test rejects at level alpha when T exceeds
1/alpha - 1, equivalently when the p-value 1/(1+T) falls below alpha.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = ["QugReport", "test_qug"]


@dataclass(frozen=True)
class QugReport:
    """Outcome of the quasi-untreated-group test.

    d1 and d2 are the two smallest distinct doses (exact ties collapsed,
    with the collapse count reported so heavy rounding is visible).
    """

    d1: float
    d2: float
    T: float
    p_value: float
    alpha: float
    reject: bool
    ties_collapsed: int
    g_count: int

    @property
    def critical_value(self) -> float:
        return 1.0 / self.alpha - 1.0


def test_qug(d: np.ndarray, alpha: float = 0.05) -> QugReport:
    """Test that the dose support extends down to zero, against a gap.

    Requires strictly positive doses: zero doses mean genuinely untreated
    units exist and the null holds trivially, so drop them first (see
    `drop_untreated`) and test whether the positive part reaches zero.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise InputError("need a 1-d dose vector with at least 2 entries")
    if np.any(d <= 0):
        raise InputError(
            "nonpositive doses present: untreated units exist, so a "
            "quasi-untreated group trivially exists; drop zero-dose units "
            "before testing the positive support"
        )
    distinct = np.unique(d)
    ties = int(d.size - distinct.size)
    if distinct.size < 2:
        raise InputError("fewer than two distinct dose values; the test is undefined")
    if ties > 0.1 * d.size:
        warnings.warn(
            f"{ties} of {d.size} doses are exact ties; heavily rounded doses "
            "are outside the test's continuous-support theory",
            stacklevel=2,
        )
    d1, d2 = float(distinct[0]), float(distinct[1])
    T = d1 / (d2 - d1)
    p = 1.0 / (1.0 + T)
    return QugReport(
        d1=d1,
        d2=d2,
        T=T,
        p_value=p,
        alpha=alpha,
        reject=bool(T > 1.0 / alpha - 1.0),
        ties_collapsed=ties,
        g_count=int(d.size),
    )
