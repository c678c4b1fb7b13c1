"""Batch command-line interface.

Subcommands: estimate, event-study, test-qug, test-linearity, twfe, simulate.
Output is a JSON envelope {"command", "config", "result"} on stdout (or
--out); `config` echoes every resolved option so reruns are reproducible, and
identical inputs with identical seeds produce byte-identical output. CSV is
available for the estimate/event-study tables. Exit codes: 0 success, 2 input
or design validation error (message names the violated invariant), 1
internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

import numpy as np

from ._json import dumps, to_jsonable
from .bandwidth import BandwidthSelection, select_inference_bandwidth
from .errors import HadError, InputError
from .kernels import make_kernel
from .linearity import poly_test_discrete, stute_joint, stute_statistic, stute_test, yatchew_test
from .panel import Panel, difference, drop_untreated, load_panel
from .qug import test_qug
from .simulate import DgpSpec, run_coverage_study
from .twfe import twfe_covariates, twfe_fit, twfe_linear_trends, twfe_weights
from .was import estimate_mass_point, estimate_shifted, estimate_was, event_study

log = logging.getLogger("had")


def _add_panel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--panel", required=True, help="long-format delimited text file")
    p.add_argument("--unit", default="unit", help="unit id column (default: unit)")
    p.add_argument("--time", default="time", help="period column (default: time)")
    p.add_argument("--outcome", default="outcome", help="outcome column (default: outcome)")
    p.add_argument("--dose", default="dose", help="dose column (default: dose)")
    p.add_argument("--covariates", default="", help="comma-separated covariate columns")
    p.add_argument("--sep", default=",", help="field separator (default: comma)")
    p.add_argument(
        "--treatment-period",
        type=int,
        default=None,
        help="override the inferred first treated period (earlier only)",
    )


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--log-level", default="warning")


def _load(args) -> Panel:
    covs = tuple(c for c in args.covariates.split(",") if c)
    return load_panel(
        args.panel,
        schema={"unit": args.unit, "time": args.time, "outcome": args.outcome, "dose": args.dose},
        covariates=covs,
        sep=args.sep,
        treatment_period=args.treatment_period,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _envelope(command: str, config: dict, result) -> dict:
    return {"command": command, "config": to_jsonable(config), "result": to_jsonable(result)}


def _kernel_bw(args, d, dy):
    kernel = make_kernel(args.kernel)
    if args.bandwidth is not None:
        if args.bandwidth <= 0:
            raise InputError("--bandwidth must be positive")
        h = float(args.bandwidth)
        bw = BandwidthSelection(h, h, float("nan"), float("nan"), float("nan"), d.size, ("user",))
    elif args.rho1:
        bw = select_inference_bandwidth(d, dy, kernel, force_equal=True)
    else:
        bw = None
    return kernel, bw


def _auto_mode(sample, alpha):
    """Pick the estimation regime from the shape of the dose support."""
    d = sample.d
    if np.any(d == 0):
        return "qug", "zero-dose units present: genuinely untreated group exists"
    rep = test_qug(d, alpha=alpha)
    if not rep.reject:
        return "qug", f"quasi-untreated-group test not rejected (p={rep.p_value:.3f})"
    if np.count_nonzero(d == d.min()) >= 2:
        return "mass", f"test rejected (p={rep.p_value:.3f}); mass point at the minimum dose"
    return "shifted", f"test rejected (p={rep.p_value:.3f}); no mass point at the minimum"


def _estimate_sample(sample, mode, kernel, bw, alpha, mass_tol):
    if mode == "qug":
        return estimate_was(sample, kernel=kernel, bw=bw, alpha=alpha)
    if mode == "shifted":
        return estimate_shifted(sample, kernel=kernel, bw=bw, alpha=alpha)
    if mode in ("mass", "mass_point"):
        return estimate_mass_point(sample, alpha=alpha, mass_tol=mass_tol)
    raise InputError(f"unknown mode {mode!r}")


def _linearity_method(d, method):
    if method != "auto":
        return method
    return "poly" if np.unique(d).size <= 20 else "stute"


def _run_recipe(panel, sample, args, kernel, bw):
    """Pre-test pipeline: quasi-untreated group, pre-trends, linearity, then
    the TWFE-or-nonparametric decision, with the full trail reported."""
    alpha = args.alpha
    steps = []

    d_pos = sample.d[sample.d > 0]
    zeros = int(np.count_nonzero(sample.d == 0))
    qug_rep = test_qug(d_pos, alpha=alpha)
    qug_ok = not qug_rep.reject
    steps.append(
        {
            "step": "test-qug",
            "zeros_dropped": zeros,
            "report": qug_rep,
            "passed": qug_ok or zeros > 0,
        }
    )

    pre = panel.pre_periods
    pre_ok = True
    if pre.size >= 2:
        pre_sample = difference(panel, int(pre[-1]), int(pre[-2]))
        method = _linearity_method(pre_sample.d, "auto")
        if method == "stute":
            rep = stute_test(pre_sample.d, pre_sample.dy, "mean_independence", B=args.B, seed=args.seed)
        else:
            rep = poly_test_discrete(pre_sample.d, pre_sample.dy, "mean_independence")
        pre_ok = rep.p_value >= alpha
        steps.append({"step": "pre-trends", "method": method, "report": rep, "passed": pre_ok})
    else:
        steps.append({"step": "pre-trends", "skipped": "no extra pre-treatment period"})

    method = _linearity_method(sample.d, "auto")
    if method == "stute":
        lin_rep = stute_test(sample.d, sample.dy, "linearity", B=args.B, seed=args.seed)
    else:
        lin_rep = poly_test_discrete(sample.d, sample.dy, "linearity")
    lin_ok = lin_rep.p_value >= alpha
    steps.append({"step": "linearity", "method": method, "report": lin_rep, "passed": lin_ok})

    if qug_ok and pre_ok and lin_ok:
        decision = "twfe"
        reason = "no pre-test rejected: the two-way fixed-effects slope is supported"
        estimate = twfe_fit(sample, alpha=alpha)
    else:
        mode, why = _auto_mode(sample, alpha)
        decision = mode
        reason = f"pre-tests reject a TWFE assumption; nonparametric route: {why}"
        estimate = _estimate_sample(sample, mode, kernel, bw, alpha, args.mass_tol)
    return {"steps": steps, "decision": decision, "reason": reason, "estimate": estimate}


def _cmd_estimate(args) -> dict:
    panel = _load(args)
    pre = panel.pre_periods
    if pre.size == 0:
        raise InputError("panel has no pre-treatment period")
    target = args.target if args.target is not None else int(panel.treatment_period)
    sample = difference(panel, int(pre[-1]), target)
    if args.drop_untreated:
        sample = drop_untreated(sample)
    kernel, bw = _kernel_bw(args, sample.d, sample.dy)

    config = {
        "panel": args.panel,
        "target": target,
        "mode": args.mode,
        "alpha": args.alpha,
        "kernel": kernel.name,
        "bandwidth": args.bandwidth,
        "rho1": args.rho1,
        "mass_tol": args.mass_tol,
        "drop_untreated": args.drop_untreated,
        "recipe": args.recipe,
        "B": args.B,
        "seed": args.seed,
        "n_untreated_dropped": sample.n_untreated_dropped,
    }
    if args.recipe:
        return _envelope("estimate", config, _run_recipe(panel, sample, args, kernel, bw))

    mode = args.mode
    if mode == "auto":
        mode, why = _auto_mode(sample, args.alpha)
        config["auto_mode"] = mode
        config["auto_reason"] = why
    if mode == "shifted":
        # how far the mean dose sits above the minimum: large values make the
        # bounded-heterogeneity condition behind sign identification easier
        config["dose_ratio_diagnostic"] = float(sample.d.mean() / sample.d.min())
    est = _estimate_sample(sample, mode, kernel, bw, args.alpha, args.mass_tol)
    return _envelope("estimate", config, est)


def _cmd_event_study(args) -> dict:
    panel = _load(args)
    kernel = make_kernel(args.kernel)
    horizons = [int(t) for t in args.periods.split(",") if t] if args.periods else None
    pre_periods = [int(t) for t in args.pre_periods.split(",") if t] if args.pre_periods else None
    results = event_study(
        panel,
        kernel=kernel,
        alpha=args.alpha,
        horizons=horizons,
        pre_periods=pre_periods,
        mode=args.mode,
    )
    base = int(panel.pre_periods[-1])
    rows = [
        {"period": t, "estimate": est, "is_pretrend": t < panel.treatment_period}
        for t, est in results
    ]
    config = {
        "panel": args.panel,
        "alpha": args.alpha,
        "kernel": kernel.name,
        "mode": args.mode,
        "periods": args.periods,
        "pre_periods": args.pre_periods,
        "plot_csv": args.plot_csv,
    }
    if args.plot_csv:
        _write_plot_csv(rows, args.plot_csv)
    return _envelope("event-study", config, {"estimates": rows, "base_period": base})


def _write_plot_csv(rows, path_or_handle) -> None:
    close = False
    if isinstance(path_or_handle, str):
        fh = open(path_or_handle, "w", newline="")
        close = True
    else:
        fh = path_or_handle
    w = csv.writer(fh)
    w.writerow(["period", "estimate", "ci_low", "ci_high", "is_pretrend"])
    for r in rows:
        est = r["estimate"]
        w.writerow([r["period"], repr(est.beta), repr(est.ci_low), repr(est.ci_high), r["is_pretrend"]])
    if close:
        fh.close()


def _cmd_test_qug(args) -> dict:
    panel = _load(args)
    d = panel.dose
    zeros = int(np.count_nonzero(d <= 0))
    rep = test_qug(d[d > 0], alpha=args.alpha)
    config = {"panel": args.panel, "alpha": args.alpha, "zeros_dropped": zeros}
    if zeros:
        config["note"] = (
            f"{zeros} zero-dose units dropped before testing: an untreated "
            "group exists, so the tested null concerns the positive doses"
        )
    return _envelope("test-qug", config, rep)


def _cmd_test_linearity(args) -> dict:
    panel = _load(args)
    pre = panel.pre_periods
    if pre.size == 0:
        raise InputError("panel has no pre-treatment period")
    base = int(pre[-1])
    mode = "mean_independence" if args.pretrends else "linearity"

    config = {
        "panel": args.panel,
        "method": args.method,
        "mode": mode,
        "joint": args.joint,
        "linear_trends": args.linear_trends,
        "B": args.B,
        "seed": args.seed,
        "alpha": args.alpha,
        "target": args.target,
    }

    if args.joint:
        if args.pretrends:
            periods = [int(t) for t in panel.periods if t < (pre[-2] if args.linear_trends and pre.size >= 2 else base)]
        else:
            periods = [int(t) for t in panel.post_periods]
        if args.target:
            periods = [int(t) for t in args.target.split(",")]
        if not periods:
            raise InputError(
                "no eligible target periods for the joint test"
                + (
                    " (pre-trend placebos under linear-trend adjustment need a "
                    "third pre-treatment period)"
                    if args.pretrends and args.linear_trends
                    else ""
                )
            )
        rep = stute_joint(
            panel, periods, mode=mode, B=args.B, seed=args.seed, detrend=args.linear_trends
        )
        config["periods"] = periods
        return _envelope("test-linearity", config, rep)

    if args.pretrends:
        if pre.size < 2:
            raise InputError("pre-trends test needs at least 2 pre-treatment periods")
        target = int(args.target) if args.target else int(pre[-2])
        sample = difference(panel, base, target)
    else:
        target = int(args.target) if args.target else int(panel.treatment_period)
        sample = difference(panel, base, target)
    config["target"] = target

    method = _linearity_method(sample.d, args.method)
    config["resolved_method"] = method
    if method == "stute":
        rep = stute_test(sample.d, sample.dy, mode, B=args.B, seed=args.seed)
    elif method == "yatchew":
        rep = yatchew_test(sample.d, sample.dy, alpha=args.alpha)
    else:
        rep = poly_test_discrete(sample.d, sample.dy, mode)
    return _envelope("test-linearity", config, rep)


def _cmd_twfe(args) -> dict:
    panel = _load(args)
    pre = panel.pre_periods
    if pre.size == 0:
        raise InputError("panel has no pre-treatment period")
    target = args.target if args.target is not None else int(panel.treatment_period)
    config = {
        "panel": args.panel,
        "target": target,
        "alpha": args.alpha,
        "linear_trends": args.linear_trends,
        "weights": args.weights,
        "covariates": args.covariates,
    }
    if args.linear_trends:
        fit = twfe_linear_trends(panel, target=target, alpha=args.alpha)
        sample = None
    else:
        sample = difference(panel, int(pre[-1]), target)
        fit = twfe_fit(sample, alpha=args.alpha)
    result: dict = {"fit": fit}
    if args.weights:
        result["weights"] = twfe_weights(panel.dose)
    if args.covariates and not args.linear_trends:
        result["covariate_slopes"] = twfe_covariates(sample, alpha=args.alpha)
    return _envelope("twfe", config, result)


def _cmd_simulate(args) -> dict:
    dgp_id = {"dgp1": "dgp1", "dgp2": "dgp2", "dgp3": "dgp3_file", "dgp3_file": "dgp3_file"}.get(
        args.dgp
    )
    if dgp_id is None:
        raise InputError(f"unknown DGP {args.dgp!r}")
    d_pool = dy0_pool = None
    if args.empirical:
        import pandas as pd

        emp = pd.read_csv(args.empirical)
        if not {"d", "dy0"}.issubset(emp.columns):
            raise InputError("--empirical file needs columns 'd' and 'dy0'")
        d_pool = emp["d"].to_numpy(float)
        dy0_pool = emp["dy0"].to_numpy(float)
    spec = DgpSpec(id=dgp_id, G=args.G, seed=args.seed, d_pool=d_pool, dy0_pool=dy0_pool)
    res = run_coverage_study(spec, replications=args.reps, alpha=args.alpha, kernel=args.kernel)
    config = {
        "dgp": dgp_id,
        "G": args.G,
        "reps": args.reps,
        "seed": args.seed,
        "alpha": args.alpha,
        "kernel": args.kernel,
        "true_was": spec.true_was,
        "empirical": args.empirical,
    }
    return _envelope("simulate", config, res)


def _estimate_csv(envelope: dict) -> str:
    """Flatten estimate/event-study results into a CSV table."""
    buf = io.StringIO()
    w = csv.writer(buf)
    result = envelope["result"]
    if envelope["command"] == "event-study":
        w.writerow(["period", "estimate", "ci_low", "ci_high", "is_pretrend"])
        for r in result["estimates"]:
            est = r["estimate"]
            w.writerow([r["period"], est["beta"], est["ci_low"], est["ci_high"], r["is_pretrend"]])
    else:
        est = result.get("estimate", result)
        keys = sorted(k for k, v in est.items() if not isinstance(v, (dict, list)))
        w.writerow(keys)
        w.writerow([est[k] for k in keys])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="had",
        description="difference-in-differences estimation for heterogeneous adoption designs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="weighted average-slope estimate with robust interval")
    _add_panel_args(p)
    _add_output_args(p)
    p.add_argument("--mode", choices=["auto", "qug", "shifted", "mass"], default="auto")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--kernel", default="epa", help="epa|tri|uni (default epa)")
    p.add_argument("--bandwidth", type=float, default=None, help="bypass bandwidth selection")
    p.add_argument("--rho1", action="store_true", help="force the bias bandwidth equal to h")
    p.add_argument("--mass-tol", type=float, default=0.0, dest="mass_tol")
    p.add_argument("--target", type=int, default=None, help="post period (default: first treated)")
    p.add_argument("--drop-untreated", action="store_true", dest="drop_untreated")
    p.add_argument("--recipe", action="store_true", help="run the full pre-test pipeline first")
    p.add_argument("--B", type=int, default=500, help="bootstrap draws for recipe tests")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("event-study", help="per-period estimates and pre-trends")
    _add_panel_args(p)
    _add_output_args(p)
    p.add_argument("--mode", choices=["qug", "shifted", "mass"], default="qug")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--kernel", default="epa")
    p.add_argument("--periods", default="", help="comma-separated post periods (default: all)")
    p.add_argument("--pre-periods", default="", dest="pre_periods")
    p.add_argument("--plot-csv", default=None, dest="plot_csv", help="write plot data CSV here")
    p.set_defaults(func=_cmd_event_study)

    p = sub.add_parser("test-qug", help="test that the dose support reaches zero")
    _add_panel_args(p)
    _add_output_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_test_qug)

    p = sub.add_parser("test-linearity", help="linearity / mean-independence tests")
    _add_panel_args(p)
    _add_output_args(p)
    p.add_argument("--method", choices=["auto", "stute", "yatchew", "poly"], default="auto")
    p.add_argument("--joint", action="store_true", help="joint cusum test across periods")
    p.add_argument("--pretrends", action="store_true", help="test pre-trend mean independence")
    p.add_argument("--linear-trends", action="store_true", dest="linear_trends")
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--target", default=None, help="target period (or comma list with --joint)")
    p.set_defaults(func=_cmd_test_linearity)

    p = sub.add_parser("twfe", help="two-way fixed-effects slope and diagnostics")
    _add_panel_args(p)
    _add_output_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--linear-trends", action="store_true", dest="linear_trends")
    p.add_argument("--weights", action="store_true", help="include the weight decomposition")
    p.set_defaults(func=_cmd_twfe)

    p = sub.add_parser("simulate", help="Monte Carlo coverage study")
    _add_output_args(p)
    p.add_argument("--dgp", default="dgp1", help="dgp1|dgp2|dgp3")
    p.add_argument("--G", type=int, default=500)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--kernel", default="epa")
    p.add_argument("--empirical", default=None, help="CSV with columns d, dy0 for dgp3")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        envelope = args.func(args)
    except HadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        raise
    except Exception as exc:  # pragma: no cover - internal failure path
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    if args.format == "csv" and envelope["command"] in ("estimate", "event-study"):
        text = _estimate_csv(envelope)
    else:
        text = dumps(envelope)
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
