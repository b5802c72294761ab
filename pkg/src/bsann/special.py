"""Scalar special functions used by the solver.

Stable logistic sigmoid and its first two derivatives, the gamma function
via a Lanczos approximation, and the standard normal CDF.
"""

import math

# Lanczos g=7 coefficients (9 terms), accurate to ~1e-15 relative on the
# positive real axis.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_SQRT2 = math.sqrt(2.0)


def sigmoid(x: float) -> float:
    """Logistic function 1/(1+exp(-x)).

    Uses the algebraically equivalent branch for negative arguments so no
    overflow occurs for any finite x.
    """
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def sigmoid_deriv(x: float, order: int = 1) -> float:
    """First or second derivative of the sigmoid.

    order=1 returns s(1-s), order=2 returns s(1-s)(1-2s) with s = sigmoid(x).
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    s = sigmoid(x)
    if order == 1:
        return s * (1.0 - s)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def gamma_fn(z: float) -> float:
    """Gamma function for z > 0 (Lanczos, g=7, 9 coefficients)."""
    if not z > 0.0:
        raise ValueError(f"gamma_fn requires z > 0, got {z}")
    if z < 0.5:
        # recurrence keeps the series argument in its accurate range
        return gamma_fn(z + 1.0) / z
    zm = z - 1.0
    acc = _LANCZOS_COEFFS[0]
    for i in range(1, len(_LANCZOS_COEFFS)):
        acc += _LANCZOS_COEFFS[i] / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (zm + 0.5) * math.exp(-t) * acc


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / _SQRT2)
