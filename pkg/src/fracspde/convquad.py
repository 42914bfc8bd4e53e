"""Backward-Euler convolution quadrature weights for fractional derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class CqWeightTable:
    """Quadrature weights d_0 .. d_{count-1} for a derivative of order ``order``.

    ``weights[i]`` equals ``tau**(-order) * (-1)**i * binom(order, i)``, the
    power-series coefficients of ``((1 - z) / tau)**order``.  The sequence
    starts at ``d_0 = tau**(-order) > 0``; every later weight is negative and
    increases toward zero.
    """

    order: float
    tau: float
    weights: np.ndarray


def cq_weights(order: float, tau: float, count: int) -> CqWeightTable:
    """Build the weight table of the backward-Euler quadrature symbol.

    The binomial factors are generated with the product recurrence
    ``w_0 = 1, w_i = w_{i-1} * (i - 1 - order) / i`` instead of factorial
    ratios; the recurrence stays well scaled for ``count`` up to 1e5 and
    beyond.
    """
    if not 0.0 < order < 1.0:
        raise ParameterError(f"derivative order must lie in (0, 1), got {order}")
    if tau <= 0.0:
        raise ParameterError(f"step size must be positive, got {tau}")
    if count < 1:
        raise ParameterError(f"weight count must be >= 1, got {count}")
    if count == 1:
        w = np.ones(1)
    else:
        i = np.arange(1.0, count)
        w = np.concatenate(([1.0], np.cumprod((i - 1.0 - order) / i)))
    w *= tau ** (-order)
    return CqWeightTable(order=order, tau=tau, weights=w)
