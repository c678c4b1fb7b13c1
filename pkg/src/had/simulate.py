"""Seeded Monte Carlo harness for coverage and size/power studies.

Every replication draws from its own counter-based stream keyed by
(seed, replication index), so results are bit-identical regardless of worker
count or scheduling, and disjoint replication ranges can be run separately
and pooled without changing any draw.

Built-in designs:

* dgp1 - dose Uniform[0,1], dy = d + d^2 + N(0,1); weighted slope 5/3.
* dgp2 - dose Beta(2,2) (zero density at the boundary), same outcome map;
  weighted slope 8/5.
* dgp3_file - dose and baseline evolution drawn without replacement from
  user-supplied empirical columns, no treatment effect; weighted slope 0.
  Without empirical columns a synthetic stand-in with zero boundary density
  is used (dose 0.02 + Beta(2,5), standard normal evolutions).
* custom - d = dmin + dscale*U (optionally snapped to `levels` equispaced
  values), dy = b0 + b1 d + b2 d^2 + (s0 + s1 |d|)
  N(0,1); parameters in `params`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from .errors import DegenerateDesignError, HadError, InputError
from .kernels import make_kernel
from .linearity import poly_test_discrete, stute_test, yatchew_test
from .panel import DifferencedSample
from .qug import test_qug
from .was import estimate_was

__all__ = ["DgpSpec", "McResult", "draw_sample", "run_coverage_study", "run_size_power"]

DGP_IDS = ("dgp1", "dgp2", "dgp3_file", "custom")
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class DgpSpec:
    """A data-generating process with a fixed seed and sample size."""

    id: str
    G: int
    seed: int = 0
    params: dict = field(default_factory=dict)
    d_pool: np.ndarray | None = None
    dy0_pool: np.ndarray | None = None

    def __post_init__(self):
        if self.id not in DGP_IDS:
            raise InputError(f"unknown DGP {self.id!r}; choose from {DGP_IDS}")
        if self.G < 3:
            raise InputError("G must be at least 3")
        if self.id == "dgp3_file" and self.d_pool is not None:
            if self.dy0_pool is None:
                raise InputError("dgp3_file needs both d_pool and dy0_pool")
            if len(self.d_pool) < self.G or len(self.dy0_pool) < self.G:
                raise InputError("empirical pools must hold at least G values")

    @property
    def true_was(self) -> float:
        if self.id == "dgp1":
            return 5.0 / 3.0
        if self.id == "dgp2":
            return 8.0 / 5.0
        if self.id == "dgp3_file":
            return 0.0
        return float(self.params.get("was", float("nan")))


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    key = np.array([seed & _U64, rep & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_sample(spec: DgpSpec, rep: int) -> tuple[np.ndarray, np.ndarray]:
    """Dose and outcome-change vectors for one replication."""
    rng = _rep_rng(spec.seed, rep)
    G = spec.G
    u = rng.random(G)
    if spec.id == "dgp1":
        d = u
        dy = d + d * d + rng.standard_normal(G)
    elif spec.id == "dgp2":
        # inverse-CDF sampling keeps one uniform per dose, preserving stream
        # alignment across parameter changes
        d = beta_dist.ppf(u, 2, 2)
        dy = d + d * d + rng.standard_normal(G)
    elif spec.id == "dgp3_file":
        if spec.d_pool is not None:
            d = rng.choice(np.asarray(spec.d_pool, float), size=G, replace=False)
            dy = rng.choice(np.asarray(spec.dy0_pool, float), size=G, replace=False)
        else:
            d = 0.02 + beta_dist.ppf(u, 2, 5)
            dy = rng.standard_normal(G)
    else:
        p = spec.params
        dmin = float(p.get("dmin", 0.0))
        dscale = float(p.get("dscale", 1.0))
        levels = p.get("levels")
        if levels:
            k = int(levels)
            d = dmin + dscale * np.floor(u * k).clip(max=k - 1) / (k - 1)
        else:
            d = dmin + dscale * u
        noise = float(p.get("s0", 1.0)) + float(p.get("s1", 0.0)) * np.abs(d)
        dy = (
            float(p.get("b0", 0.0))
            + float(p.get("b1", 0.0)) * d
            + float(p.get("b2", 0.0)) * d * d
            + noise * rng.standard_normal(G)
        )
    return d, dy


@dataclass(frozen=True)
class McResult:
    """Aggregated Monte Carlo outcome.

    `replications` counts successful replications (the estimates' denominator,
    so coverage * replications is an integer); failed replications are counted
    in `failures`, never silently dropped.
    """

    mean_estimate: float
    coverage: float
    rejection_rate: float
    replications: int
    mc_se: float
    failures: int = 0


def _coverage_chunk(spec: DgpSpec, reps: range, alpha: float, kernel_name: str):
    """Per-replication records for `reps`; aggregation happens at the caller
    in replication order so results do not depend on chunking."""
    kernel = make_kernel(kernel_name)
    truth = spec.true_was
    idx, beta, covered, rejected = [], [], [], []
    for rep in reps:
        idx.append(rep)
        d, dy = draw_sample(spec, rep)
        try:
            sample = DifferencedSample(dy=dy, d=d, base_period=1, target_period=2)
            est = estimate_was(sample, kernel=kernel, alpha=alpha)
        except HadError:
            beta.append(np.nan)
            covered.append(False)
            rejected.append(False)
            continue
        beta.append(est.beta)
        covered.append(bool(est.ci_low <= truth <= est.ci_high))
        rejected.append(not est.ci_low <= 0.0 <= est.ci_high)
    return np.array(idx), np.array(beta), np.array(covered), np.array(rejected)


def _n_jobs(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    return max(1, int(os.environ.get("HAD_THREADS", "1")))


def run_coverage_study(
    dgp: DgpSpec,
    replications: int,
    alpha: float = 0.05,
    kernel: str = "epanechnikov",
    rep_start: int = 0,
    n_jobs: int | None = None,
) -> McResult:
    """Coverage of the bias-corrected interval for the DGP's true estimand.

    Runs replications rep_start .. rep_start + replications - 1; splitting the
    range across calls and pooling the counts reproduces a single run exactly.
    """
    if replications < 1:
        raise InputError("need at least 1 replication")
    jobs = _n_jobs(n_jobs)
    reps = range(rep_start, rep_start + replications)
    if jobs == 1:
        parts = [_coverage_chunk(dgp, reps, alpha, kernel)]
    else:
        chunks = [range(reps.start + i, reps.stop, jobs) for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(_coverage_chunk, [dgp] * jobs, chunks, [alpha] * jobs, [kernel] * jobs)
            )
    # reassemble in replication order so float sums match any chunking
    idx = np.concatenate([p[0] for p in parts])
    order = np.argsort(idx)
    beta = np.concatenate([p[1] for p in parts])[order]
    covered = np.concatenate([p[2] for p in parts])[order]
    rejected = np.concatenate([p[3] for p in parts])[order]
    ok = ~np.isnan(beta)
    n_ok = int(ok.sum())
    failures = int(beta.size - n_ok)
    if n_ok == 0:
        raise DegenerateDesignError("every replication failed")
    cov = int(covered.sum()) / n_ok
    return McResult(
        mean_estimate=float(np.sum(beta[ok]) / n_ok),
        coverage=cov,
        rejection_rate=int(rejected.sum()) / n_ok,
        replications=n_ok,
        mc_se=math.sqrt(cov * (1.0 - cov) / n_ok),
        failures=failures,
    )


TESTS = ("qug", "stute", "yatchew", "poly")


def _reject_once(test: str, spec: DgpSpec, rep: int, alpha: float, B: int) -> tuple[bool, float]:
    d, y = draw_sample(spec, rep)
    if test == "qug":
        rep_ = test_qug(d, alpha=alpha)
        return rep_.reject, rep_.T
    if test == "stute":
        boot_seed = int(np.random.SeedSequence((spec.seed, rep, 1)).generate_state(1)[0])
        rep_ = stute_test(d, y, "linearity", B=B, seed=boot_seed)
        return rep_.p_value < alpha, rep_.S
    if test == "yatchew":
        rep_ = yatchew_test(d, y, alpha=alpha)
        return rep_.p_value < alpha, rep_.T_hr
    if test == "poly":
        rep_ = poly_test_discrete(d, y, "linearity")
        return rep_.p_value < alpha, rep_.statistic
    raise InputError(f"unknown test {test!r}; choose from {TESTS}")


def _size_power_chunk(test: str, spec: DgpSpec, reps: range, alpha: float, B: int):
    idx, stat, rejected = [], [], []
    for rep in reps:
        idx.append(rep)
        try:
            rej, s = _reject_once(test, spec, rep, alpha, B)
        except HadError:
            stat.append(np.nan)
            rejected.append(False)
            continue
        stat.append(s)
        rejected.append(bool(rej))
    return np.array(idx), np.array(stat), np.array(rejected)


def _one_rate(test, spec, replications, alpha, B, jobs) -> McResult:
    reps = range(replications)
    if jobs == 1:
        parts = [_size_power_chunk(test, spec, reps, alpha, B)]
    else:
        chunks = [range(i, replications, jobs) for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    _size_power_chunk,
                    [test] * jobs,
                    [spec] * jobs,
                    chunks,
                    [alpha] * jobs,
                    [B] * jobs,
                )
            )
    idx = np.concatenate([p[0] for p in parts])
    order = np.argsort(idx)
    stat = np.concatenate([p[1] for p in parts])[order]
    rejected = np.concatenate([p[2] for p in parts])[order]
    ok = ~np.isnan(stat)
    n_ok = int(ok.sum())
    failures = int(stat.size - n_ok)
    if n_ok == 0:
        raise DegenerateDesignError("every replication failed")
    rate = int(rejected.sum()) / n_ok
    return McResult(
        mean_estimate=float(np.sum(stat[ok]) / n_ok),
        coverage=float("nan"),
        rejection_rate=rate,
        replications=n_ok,
        mc_se=math.sqrt(rate * (1.0 - rate) / n_ok),
        failures=failures,
    )


def run_size_power(
    test: str,
    dgp_null: DgpSpec,
    dgp_alt: DgpSpec,
    replications: int,
    alpha: float = 0.05,
    B: int = 500,
    n_jobs: int | None = None,
) -> tuple[McResult, McResult]:
    """Rejection rates of a named test under a null and an alternative DGP."""
    if test not in TESTS:
        raise InputError(f"unknown test {test!r}; choose from {TESTS}")
    if replications < 1:
        raise InputError("need at least 1 replication")
    jobs = _n_jobs(n_jobs)
    null_res = _one_rate(test, dgp_null, replications, alpha, B, jobs)
    alt_res = _one_rate(test, dgp_alt, replications, alpha, B, jobs)
    return null_res, alt_res
