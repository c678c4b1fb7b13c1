"""Difference-in-differences estimation and testing for heterogeneous adoption designs.

Panels where every unit is untreated at baseline and then receives a strictly
positive, heterogeneous dose: nonparametric weighted-average-slope estimation
with data-driven bandwidths and bias-corrected intervals, a test for a
quasi-untreated group, linearity and pre-trend tests backing two-way
fixed-effects regressions, TWFE weight diagnostics, and a seeded Monte Carlo
harness.
"""

from .bandwidth import BandwidthSelection, select_bandwidth
from .errors import DegenerateDesignError, HadError, InputError
from .kernels import KernelSpec, make_kernel
from .linearity import (
    PolyReport,
    StuteReport,
    YatchewReport,
    poly_test_discrete,
    stute_covariates,
    stute_joint,
    stute_statistic,
    stute_test,
    yatchew_test,
)
from .localpoly import LocalFit, local_fit
from .panel import (
    DifferencedSample,
    Panel,
    detrended_difference,
    difference,
    drop_untreated,
    load_panel,
    save_panel,
)
from .qug import QugReport, test_qug
from .simulate import DgpSpec, McResult, draw_sample, run_coverage_study, run_size_power
from .twfe import (
    CovariateSlopes,
    TwfeEstimate,
    WeightReport,
    twfe_covariates,
    twfe_fit,
    twfe_linear_trends,
    twfe_weights,
)
from .was import (
    WasEstimate,
    estimate_mass_point,
    estimate_shifted,
    estimate_was,
    event_study,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthSelection",
    "CovariateSlopes",
    "DegenerateDesignError",
    "DgpSpec",
    "DifferencedSample",
    "HadError",
    "InputError",
    "KernelSpec",
    "LocalFit",
    "McResult",
    "Panel",
    "PolyReport",
    "QugReport",
    "StuteReport",
    "TwfeEstimate",
    "WasEstimate",
    "WeightReport",
    "YatchewReport",
    "detrended_difference",
    "difference",
    "draw_sample",
    "drop_untreated",
    "estimate_mass_point",
    "estimate_shifted",
    "estimate_was",
    "event_study",
    "load_panel",
    "local_fit",
    "make_kernel",
    "poly_test_discrete",
    "run_coverage_study",
    "run_size_power",
    "save_panel",
    "select_bandwidth",
    "stute_covariates",
    "stute_joint",
    "stute_statistic",
    "stute_test",
    "test_qug",
    "twfe_covariates",
    "twfe_fit",
    "twfe_linear_trends",
    "twfe_weights",
    "yatchew_test",
]
