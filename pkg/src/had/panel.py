"""Long-format panel ingestion and differencing for heterogeneous adoption designs.

A valid panel is balanced, has every unit untreated before the treatment
period F, and gives each unit one constant dose from F onward. Estimation
consumes per-unit outcome changes between two periods paired with the
unit-level post-F dose.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import IO, Mapping

import numpy as np
import pandas as pd

from .errors import InputError

__all__ = [
    "Panel",
    "DifferencedSample",
    "load_panel",
    "save_panel",
    "difference",
    "detrended_difference",
    "drop_untreated",
]

DEFAULT_SCHEMA = {"unit": "unit", "time": "time", "outcome": "outcome", "dose": "dose"}


@dataclass(frozen=True)
class Panel:
    """Balanced unit-by-period panel with a unit-level treatment dose.

    Attributes
    ----------
    units : np.ndarray
        Unit identifiers, one per row of `y`.
    periods : np.ndarray
        Sorted distinct integer period labels, one per column of `y`.
    y : np.ndarray
        Outcomes, shape (G, T).
    dose : np.ndarray
        Unit-level post-treatment dose, shape (G,).
    treatment_period : int
        F, the first period with nonzero doses (inferred or overridden).
    covariates : np.ndarray or None
        Per-record covariates, shape (G, T, p); differencing takes the
        base-period rows.
    covariate_names : tuple of str
    """

    units: np.ndarray
    periods: np.ndarray
    y: np.ndarray
    dose: np.ndarray
    treatment_period: int
    covariates: np.ndarray | None = None
    covariate_names: tuple[str, ...] = ()

    @property
    def g_count(self) -> int:
        return self.units.size

    def period_index(self, period: int) -> int:
        idx = np.searchsorted(self.periods, period)
        if idx >= self.periods.size or self.periods[idx] != period:
            raise InputError(f"period {period} not in panel (have {list(self.periods)})")
        return int(idx)

    @property
    def pre_periods(self) -> np.ndarray:
        return self.periods[self.periods < self.treatment_period]

    @property
    def post_periods(self) -> np.ndarray:
        return self.periods[self.periods >= self.treatment_period]


@dataclass(frozen=True)
class DifferencedSample:
    """Per-unit outcome change paired with the post-treatment dose.

    dy[g] = Y[g, target] - Y[g, base]; d[g] is the unit's post-F dose even
    for pre-trend pairs, where an untreated evolution is regressed against
    the future dose.
    """

    dy: np.ndarray
    d: np.ndarray
    base_period: int
    target_period: int
    x: np.ndarray | None = None
    covariate_names: tuple[str, ...] = ()
    n_untreated_dropped: int = 0

    @property
    def g_count(self) -> int:
        return self.dy.size

    def __post_init__(self):
        if self.dy.shape != self.d.shape or self.dy.ndim != 1:
            raise InputError("dy and d must be 1-d arrays of equal length")
        if self.g_count < 3:
            raise InputError(f"need at least 3 units, got {self.g_count}")
        if np.ptp(self.d) <= 1e-12 * max(1.0, float(np.max(np.abs(self.d)))):
            raise InputError("dose has zero variance across units")


def _validate_structure(df: pd.DataFrame, treatment_period: int | None) -> int:
    """Check HAD invariants on a long frame with columns unit/time/outcome/dose."""
    dup = df.duplicated(subset=["unit", "time"])
    if dup.any():
        first = df.loc[dup.idxmax()]
        raise InputError(
            f"duplicate (unit, period) record: unit {first['unit']!r}, period {first['time']}"
        )
    counts = df.groupby("unit", sort=False)["time"].count()
    n_periods = df["time"].nunique()
    if counts.nunique() != 1 or counts.iloc[0] != n_periods:
        bad = counts[counts != n_periods]
        raise InputError(
            f"unbalanced panel: unit {bad.index[0]!r} has {bad.iloc[0]} of {n_periods} periods"
        )
    if n_periods < 2:
        raise InputError("need at least 2 periods")
    if df["unit"].nunique() < 3:
        raise InputError("need at least 3 units")
    if (df["dose"] < 0).any():
        raise InputError("doses must be nonnegative")

    treated = df.loc[df["dose"] > 0, "time"]
    if treated.empty:
        raise InputError("no period has a nonzero dose; cannot infer the treatment period")
    inferred_f = int(treated.min())
    if treatment_period is None:
        f = inferred_f
    else:
        f = int(treatment_period)
        if f > inferred_f:
            raise InputError(
                f"treatment-period override {f} is later than the first dosed period "
                f"{inferred_f}; overrides may only move F earlier (anticipation checks)"
            )
    pre = df[df["time"] < inferred_f]
    if (pre["dose"] != 0).any():
        bad = pre.loc[pre["dose"] != 0].iloc[0]
        raise InputError(
            f"nonzero dose before treatment period {inferred_f}: unit {bad['unit']!r}, "
            f"period {bad['time']}"
        )
    post = df[df["time"] >= inferred_f]
    spread = post.groupby("unit", sort=False)["dose"].nunique()
    if (spread > 1).any():
        raise InputError(
            f"dose varies within unit {spread[spread > 1].index[0]!r} across post periods; "
            "the dose must be a unit-level exposure"
        )
    return f


def load_panel(
    source: str | IO[str],
    schema: Mapping[str, str] | None = None,
    covariates: tuple[str, ...] = (),
    sep: str = ",",
    treatment_period: int | None = None,
) -> Panel:
    """Read a long CSV into a validated Panel.

    `schema` maps the roles unit/time/outcome/dose to column names (defaults
    to those literal names). `treatment_period` overrides the inferred F,
    but only toward earlier periods. Missing covariate cells are an error.
    """
    colmap = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise InputError(f"unknown schema roles: {sorted(unknown)}")
        colmap.update(schema)

    df = pd.read_csv(source, sep=sep)
    needed = list(colmap.values()) + list(covariates)
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise InputError(f"missing columns: {missing} (have {list(df.columns)})")
    df = df[needed].rename(columns={v: k for k, v in colmap.items()})

    for col in ["time", "outcome", "dose", *covariates]:
        try:
            df[col] = pd.to_numeric(df[col], errors="raise")
        except (ValueError, TypeError) as exc:
            raise InputError(f"non-numeric value in column {col!r}: {exc}") from exc
        if df[col].isna().any():
            raise InputError(f"missing value in column {col!r} (imputation is not supported)")
    if not np.array_equal(df["time"].to_numpy(), df["time"].to_numpy().astype(int)):
        raise InputError("period labels must be integers")
    df["time"] = df["time"].astype(int)

    f = _validate_structure(df, treatment_period)

    periods = np.sort(df["time"].unique())
    units_in_order = df["unit"].drop_duplicates().to_numpy()
    wide = df.pivot(index="unit", columns="time", values="outcome")
    wide = wide.loc[units_in_order, periods]
    y = wide.to_numpy(dtype=float)

    post_f_inferred = int(df.loc[df["dose"] > 0, "time"].min())
    dose_rows = df[df["time"] >= post_f_inferred].drop_duplicates("unit").set_index("unit")
    dose = dose_rows.loc[units_in_order, "dose"].to_numpy(dtype=float)

    cov = None
    if covariates:
        mats = [
            df.pivot(index="unit", columns="time", values=c)
            .loc[units_in_order, periods]
            .to_numpy(dtype=float)
            for c in covariates
        ]
        cov = np.stack(mats, axis=-1)

    return Panel(
        units=units_in_order,
        periods=periods,
        y=y,
        dose=dose,
        treatment_period=f,
        covariates=cov,
        covariate_names=tuple(covariates),
    )


def save_panel(panel: Panel, target: str | IO[str], sep: str = ",") -> None:
    """Write a Panel back to long CSV; round-trips finite decimal inputs."""
    rows = {
        "unit": np.repeat(panel.units, panel.periods.size),
        "time": np.tile(panel.periods, panel.g_count),
        "outcome": panel.y.ravel(),
        "dose": np.where(
            np.tile(panel.periods, panel.g_count) >= panel.treatment_period,
            np.repeat(panel.dose, panel.periods.size),
            0.0,
        ),
    }
    df = pd.DataFrame(rows)
    for i, name in enumerate(panel.covariate_names):
        df[name] = panel.covariates[:, :, i].ravel()
    df.to_csv(target, sep=sep, index=False, float_format=None)


def difference(panel: Panel, base: int, target: int) -> DifferencedSample:
    """dy = Y[target] - Y[base] per unit, paired with the post-F dose.

    For effect estimation use base = F - 1 and target >= F; for pre-trends
    both periods lie before F and dy is an untreated evolution regressed
    against the future dose.
    """
    if base == target:
        raise InputError("base and target periods must differ")
    bi, ti = panel.period_index(base), panel.period_index(target)
    dy = panel.y[:, ti] - panel.y[:, bi]
    x = panel.covariates[:, bi, :] if panel.covariates is not None else None
    return DifferencedSample(
        dy=dy,
        d=panel.dose.copy(),
        base_period=base,
        target_period=target,
        x=x,
        covariate_names=panel.covariate_names,
    )


def detrended_difference(panel: Panel, base_pair: tuple[int, int], target: int) -> DifferencedSample:
    """Deviation of Y[target] from the unit-specific linear trend through base_pair.

    base_pair = (b_hi, b_lo) with b_hi > b_lo defines the per-unit slope
    (Y[b_hi] - Y[b_lo]) / (b_hi - b_lo). The trend is anchored at b_hi for
    targets after the pair and at b_lo for targets before it, so pre-trend
    placebos and event-study outcomes use the same slope. At target == anchor
    the outcome is identically zero.
    """
    b_hi, b_lo = base_pair
    if b_hi <= b_lo:
        raise InputError(f"base_pair must be (later, earlier), got {base_pair}")
    hi, lo = panel.period_index(b_hi), panel.period_index(b_lo)
    ti = panel.period_index(target)
    anchor = b_hi if target > b_hi else b_lo
    ai = panel.period_index(anchor)
    slope = (panel.y[:, hi] - panel.y[:, lo]) / (b_hi - b_lo)
    dy = panel.y[:, ti] - panel.y[:, ai] - (target - anchor) * slope
    x = panel.covariates[:, ai, :] if panel.covariates is not None else None
    return DifferencedSample(
        dy=dy,
        d=panel.dose.copy(),
        base_period=anchor,
        target_period=target,
        x=x,
        covariate_names=panel.covariate_names,
    )


def drop_untreated(sample: DifferencedSample) -> DifferencedSample:
    """Remove zero-dose units, recording how many were dropped."""
    keep = sample.d > 0
    removed = int(np.count_nonzero(~keep))
    if removed == 0:
        return sample
    if not keep.any():
        raise InputError("all units have zero dose; nothing left after dropping untreated")
    return replace(
        sample,
        dy=sample.dy[keep],
        d=sample.d[keep],
        x=sample.x[keep] if sample.x is not None else None,
        n_untreated_dropped=sample.n_untreated_dropped + removed,
    )
