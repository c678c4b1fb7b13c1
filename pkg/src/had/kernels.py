"""One-sided kernels for boundary regression at the low end of the dose support.

Kernels live on [0, 1]: the dose has no mass below the boundary, so only the
right half of the usual symmetric shapes is used. Each spec caches the moment
sequence kappa_j = int_0^1 t^j k(t) dt together with the two constants that
drive boundary local-linear asymptotics,

    C = (kappa2^2 - kappa1*kappa3) / (kappa0*kappa2 - kappa1^2)

(the h^2 * C * m''(0)/2 smoothing bias of the intercept) and the squared
integral of the equivalent kernel

    k*(t) = (kappa2 - kappa1*t) / (kappa0*kappa2 - kappa1^2) * k(t),

which scales the intercept's asymptotic variance. Stored values are exact
rationals evaluated to float; tests recompute them by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError

__all__ = ["KernelSpec", "make_kernel", "curvature_pilot_constants", "KERNEL_NAMES"]


def _uniform(t: np.ndarray) -> np.ndarray:
    return np.where((t >= 0) & (t <= 1), 1.0, 0.0)


def _triangular(t: np.ndarray) -> np.ndarray:
    return np.where((t >= 0) & (t <= 1), 1.0 - t, 0.0)


def _epanechnikov(t: np.ndarray) -> np.ndarray:
    return np.where((t >= 0) & (t <= 1), 0.75 * (1.0 - t * t), 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """A one-sided kernel with cached boundary-regression constants.

    Attributes
    ----------
    name : str
        One of ``uniform``, ``triangular``, ``epanechnikov``.
    k : callable
        Vectorized kernel function, nonnegative, supported on [0, 1].
    kappa0, kappa1, kappa2, kappa3 : float
        Moments int_0^1 t^j k(t) dt.
    c_const : float
        Bias constant C of the boundary local-linear intercept.
    kstar_sq_int : float
        int_0^1 k*(t)^2 dt, variance constant of the same intercept.
    """

    name: str
    k: Callable[[np.ndarray], np.ndarray]
    kappa0: float
    kappa1: float
    kappa2: float
    kappa3: float
    c_const: float
    kstar_sq_int: float

    @property
    def moments(self) -> tuple[float, float, float, float]:
        return (self.kappa0, self.kappa1, self.kappa2, self.kappa3)

    def moment(self, j: int) -> float:
        """kappa_j for arbitrary j, by 64-node Gauss-Legendre quadrature."""
        nodes, weights = np.polynomial.legendre.leggauss(64)
        t = 0.5 * (nodes + 1.0)
        return float(0.5 * np.sum(weights * t**j * self.k(t)))


# name -> (k, kappa0..3, C, int k*^2); rationals derived symbolically
_KERNELS = {
    "uniform": (_uniform, 1.0, 1 / 2, 1 / 3, 1 / 4, -1 / 6, 4.0),
    "triangular": (_triangular, 1 / 2, 1 / 6, 1 / 12, 1 / 20, -1 / 10, 24 / 5),
    "epanechnikov": (_epanechnikov, 1 / 2, 3 / 16, 1 / 10, 1 / 16, -11 / 95, 56832 / 12635),
}

KERNEL_NAMES = tuple(_KERNELS)

_ALIASES = {"epa": "epanechnikov", "tri": "triangular", "uni": "uniform"}


def make_kernel(name: str = "epanechnikov") -> KernelSpec:
    """Build the kernel spec for `name` (accepts epa/tri/uni shorthands)."""
    key = _ALIASES.get(name.lower(), name.lower())
    if key not in _KERNELS:
        raise InputError(
            f"unknown kernel {name!r}; choose from {', '.join(_KERNELS)} (or epa/tri/uni)"
        )
    k, k0, k1, k2, k3, c, r = _KERNELS[key]
    return KernelSpec(key, k, k0, k1, k2, k3, c, r)


# (bias, variance) constants of the curvature estimator 2*b2 from a local
# quadratic boundary fit: bias ~ h * bias22 * m'''(0), var ~ var22 * s2/(f G h^5).
# Derived from the p=2 moment matrices S, c, T of each kernel.
_CURVATURE_CONSTANTS = {
    "uniform": (1 / 2, 720.0),
    "triangular": (3 / 7, 8640 / 7),
    "epanechnikov": (85 / 192, 38395 / 36),
}


def curvature_pilot_constants(kernel: KernelSpec) -> tuple[float, float]:
    """Bias/variance constants used to pick the curvature-pilot bandwidth."""
    return _CURVATURE_CONSTANTS[kernel.name]
