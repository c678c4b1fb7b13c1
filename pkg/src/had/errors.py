"""Exception hierarchy.

Validation failures (bad input data, violated design invariants) raise
:class:`InputError`; numerically degenerate estimation problems raise
:class:`DegenerateDesignError`. The CLI maps both to exit code 2 and
anything else to exit code 1.
"""


class HadError(Exception):
    """Base class for all errors raised by this package."""


class InputError(HadError, ValueError):
    """Input data violates a documented invariant (unbalanced panel, ...)."""


class DegenerateDesignError(HadError):
    """Estimation problem is singular or has too few effective observations."""
