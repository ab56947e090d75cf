"""Polylogarithm of order 1/2 on ``[0, 1)``."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import factorial, zeta

#: Below this ``t = -ln z`` the expansion about ``z = 1`` is used.
SWITCH_T = 0.1
_N_EXPANSION = 12
# Li_{1/2}(e^{-t}) = sqrt(pi/t) + sum_k zeta(1/2 - k) (-t)^k / k!
_COEFFS = np.array([zeta(0.5 - k) * (-1.0) ** k / factorial(k) for k in range(_N_EXPANSION)])


def li_half_exp(t: float) -> float:
    """``Li_{1/2}(exp(-t))`` for ``t > 0``."""
    if not t > 0:
        raise ValueError(f"Li_1/2(e^-t) diverges for t <= 0, got t={t!r}")
    if math.isinf(t):
        return 0.0
    if t < SWITCH_T:
        return math.sqrt(math.pi / t) + float(np.polyval(_COEFFS[::-1], t))
    # Direct series; terms fall below 1e-17 of the first after this many.
    n = int(math.ceil(39.2 / t)) + 1
    k = np.arange(1, n + 1, dtype=float)
    terms = np.exp(-t * k) / np.sqrt(k)
    return float(np.sum(terms[::-1]))


def li_half(z: float) -> float:
    """``Li_{1/2}(z) = sum_{k>=1} z^k / sqrt(k)`` for ``0 <= z < 1``."""
    if not 0.0 <= z < 1.0:
        raise ValueError(f"Li_1/2(z) needs 0 <= z < 1, got {z!r}")
    if z == 0.0:
        return 0.0
    return li_half_exp(-math.log(z))
