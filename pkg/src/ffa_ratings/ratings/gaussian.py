"""Standard normal helpers and the TrueSkill truncation corrections.

Scalar ``math`` versions: these sit in the inner loop of the N-player
message passing, where per-call overhead of array functions dominates.
"""

from __future__ import annotations

import math

from scipy.special import ndtri

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Below this, Phi(x) is computed from the Mills-ratio series instead of erfc.
_ASYMPTOTIC_BELOW = -30.0


def pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def ppf(p: float) -> float:
    return float(ndtri(p))


def _v_asymptotic(x: float) -> float:
    # Phi(x)/N(x) = R(z) with z = -x; R(z) ~ (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8) / z
    z = -x
    inv2 = 1.0 / (z * z)
    mills = (1.0 - inv2 * (1.0 - inv2 * (3.0 - inv2 * (15.0 - inv2 * 105.0)))) / z
    return 1.0 / mills


def trueskill_v(x: float) -> float:
    """v(x) = N(x) / Phi(x), the mean correction for a win."""
    if not math.isfinite(x):
        raise ValueError(f"v is defined for finite input only, got {x}")
    if x < _ASYMPTOTIC_BELOW:
        return _v_asymptotic(x)
    return pdf(x) / cdf(x)


def trueskill_w(x: float) -> float:
    """w(x) = v(x) (v(x) + x), the variance correction for a win."""
    v = trueskill_v(x)
    return v * (v + x)
