"""JSON schema for CLI output envelopes.

Every CLI command emits {"command", "config", "result"}; `config` echoes the
resolved options so a run can be reproduced from its own output. The schema
is intentionally strict about the envelope and the named numeric fields of
each report, and validated in the test suite with `jsonschema`.
"""

_number = {"type": ["number", "null"]}
_int = {"type": "integer"}
_str = {"type": "string"}
_bool = {"type": "boolean"}


def _report(properties: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": required,
        "additionalProperties": True,
    }


WAS_ESTIMATE = _report(
    {
        "beta": _number,
        "mu0_hat": _number,
        "bias_hat": _number,
        "var_hat": _number,
        "ci_low": _number,
        "ci_high": _number,
        "alpha": _number,
        "h_used": _number,
        "b_used": _number,
        "n_eff": _int,
        "boundary": _number,
        "mode": {"enum": ["qug", "shifted", "mass_point"]},
        "g_count": _int,
    },
    ["beta", "mu0_hat", "bias_hat", "var_hat", "ci_low", "ci_high", "alpha", "mode"],
)

QUG_REPORT = _report(
    {
        "d1": _number,
        "d2": _number,
        "T": _number,
        "p_value": _number,
        "alpha": _number,
        "reject": _bool,
        "ties_collapsed": _int,
        "g_count": _int,
    },
    ["d1", "d2", "T", "p_value", "alpha", "reject", "ties_collapsed"],
)

STUTE_REPORT = _report(
    {
        "S": _number,
        "p_value": _number,
        "B": _int,
        "seed": _int,
        "mode": _str,
        "periods": {"type": "array", "items": _int},
        "per_period_S": {"type": "array", "items": _number},
    },
    ["S", "p_value", "B", "seed", "mode"],
)

YATCHEW_REPORT = _report(
    {
        "sig2_lin": _number,
        "sig2_diff": _number,
        "sigW4_hat": _number,
        "T_hr": _number,
        "p_value": _number,
        "G": _int,
    },
    ["sig2_lin", "sig2_diff", "sigW4_hat", "T_hr", "p_value", "G"],
)

POLY_REPORT = _report(
    {
        "statistic": _number,
        "p_value": _number,
        "df": _int,
        "k_values": _int,
        "mode": _str,
        "G": _int,
    },
    ["statistic", "p_value", "df", "k_values", "mode", "G"],
)

TWFE_ESTIMATE = _report(
    {
        "beta_fe": _number,
        "beta0": _number,
        "se": _number,
        "ci_low": _number,
        "ci_high": _number,
        "dof": _number,
        "alpha": _number,
        "G": _int,
    },
    ["beta_fe", "beta0", "se", "ci_low", "ci_high", "dof", "alpha", "G"],
)

WEIGHT_REPORT = _report(
    {
        "weights": {"type": "array", "items": _number},
        "n_positive": _int,
        "n_negative": _int,
        "negative_sum": _number,
    },
    ["weights", "n_positive", "n_negative", "negative_sum"],
)

COVARIATE_SLOPES = _report(
    {
        "delta_hat": {"type": "array", "items": _number},
        "as_hat": _number,
        "se": _number,
        "ci_low": _number,
        "ci_high": _number,
        "alpha": _number,
        "G": _int,
    },
    ["delta_hat", "as_hat", "se"],
)

MC_RESULT = _report(
    {
        "mean_estimate": _number,
        "coverage": _number,
        "rejection_rate": _number,
        "replications": _int,
        "mc_se": _number,
        "failures": _int,
    },
    ["mean_estimate", "coverage", "rejection_rate", "replications", "mc_se"],
)

EVENT_STUDY_RESULT = _report(
    {
        "estimates": {
            "type": "array",
            "items": _report({"period": _int, "estimate": WAS_ESTIMATE, "is_pretrend": _bool},
                             ["period", "estimate", "is_pretrend"]),
        },
        "base_period": _int,
    },
    ["estimates", "base_period"],
)

OUTPUT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "command": {
            "enum": ["estimate", "event-study", "test-qug", "test-linearity", "twfe", "simulate"]
        },
        "config": {"type": "object"},
        "result": {
            "oneOf": [
                WAS_ESTIMATE,
                QUG_REPORT,
                STUTE_REPORT,
                YATCHEW_REPORT,
                POLY_REPORT,
                TWFE_ESTIMATE,
                MC_RESULT,
                EVENT_STUDY_RESULT,
                _report({"steps": {"type": "array"}, "estimate": {"type": "object"}}, ["steps"]),
                _report({"fit": TWFE_ESTIMATE}, ["fit"]),
            ]
        },
    },
    "required": ["command", "config", "result"],
    "additionalProperties": False,
}
