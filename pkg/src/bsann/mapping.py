"""Domain handling for the semi-infinite price axis.

Two modes: plain truncation at a finite s_max (identity coordinates), and an
arctangent compression of [0, infinity) onto x in [0, 1):

    x(S) = (2/pi) * arctan(S / L),      S(x) = L * tan(pi x / 2)

The characteristic length L is chosen so a reference price (the strike) lands
at a chosen quantile l of the unit interval: L = K / tan(pi l / 2).

Derivatives of a network trained in x-coordinates convert to price
coordinates through

    dU/dS   = d1 / Upsilon(x)
    d2U/dS2 = d2 / Upsilon(x)^2 + Theta(x) * d1 / Upsilon(x)

with Upsilon = dS/dx = L pi / (2 cos^2(pi x / 2)) and
Theta = -2 cos(pi x / 2) sin(pi x / 2) / L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import NetEval

TRUNCATED = "truncated"
ARCTAN = "arctan"


@dataclass(frozen=True)
class DomainMap:
    kind: str
    s_max: float = 0.0          # truncated mode: right edge of the price grid
    length: float = 0.0         # arctan mode: characteristic length L
    quantile: float = 0.6       # arctan mode: x-position of the reference price
    right_eval_point: float = 0.9999999  # surrogate abscissa for x = 1

    def __post_init__(self):
        if self.kind not in (TRUNCATED, ARCTAN):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == TRUNCATED and not self.s_max > 0.0:
            raise ValueError(f"truncated map needs s_max > 0, got {self.s_max}")
        if self.kind == ARCTAN:
            if not self.length > 0.0:
                raise ValueError(f"arctan map needs a positive length, got {self.length}")
            if not 0.99 < self.right_eval_point < 1.0:
                raise ValueError(
                    f"right_eval_point must lie in (0.99, 1), got {self.right_eval_point}"
                )


@dataclass(frozen=True)
class MapJacobians:
    upsilon: float  # dS/dx
    theta: float    # second-derivative correction coefficient


def truncated_map(s_max: float) -> DomainMap:
    return DomainMap(kind=TRUNCATED, s_max=float(s_max))


def make_arctan_map(
    reference_price: float, quantile: float = 0.6, right_eval_point: float = 0.9999999
) -> DomainMap:
    """Arctan map placing reference_price at x = quantile."""
    if not reference_price > 0.0:
        raise ValueError(f"reference_price must be positive, got {reference_price}")
    if not 0.0 < quantile < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {quantile}")
    length = reference_price / math.tan(math.pi * quantile / 2.0)
    return DomainMap(
        kind=ARCTAN, length=length, quantile=quantile, right_eval_point=right_eval_point
    )


def to_x(dmap: DomainMap, s):
    """Price to solver coordinate. Identity for truncated maps."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0):
        raise ValueError("price must be non-negative")
    if dmap.kind == TRUNCATED:
        return s_arr if s_arr.ndim else float(s_arr)
    out = (2.0 / math.pi) * np.arctan(s_arr / dmap.length)
    return out if out.ndim else float(out)


def from_x(dmap: DomainMap, x):
    """Solver coordinate to price. Domain error at or beyond x = 1 for arctan."""
    x_arr = np.asarray(x, dtype=float)
    if dmap.kind == TRUNCATED:
        if np.any(x_arr < 0.0):
            raise ValueError("coordinate must be non-negative")
        return x_arr if x_arr.ndim else float(x_arr)
    if np.any(x_arr < 0.0) or np.any(x_arr >= 1.0):
        raise ValueError("arctan map is defined for x in [0, 1); use right_eval_point for x = 1")
    out = dmap.length * np.tan(math.pi * x_arr / 2.0)
    return out if out.ndim else float(out)


def jacobians(dmap: DomainMap, x: float) -> MapJacobians:
    """Chain-rule factors at one solver coordinate."""
    if dmap.kind == TRUNCATED:
        return MapJacobians(upsilon=1.0, theta=0.0)
    if not 0.0 <= x < 1.0:
        raise ValueError("arctan jacobians are defined for x in [0, 1)")
    half = math.pi * x / 2.0
    c = math.cos(half)
    upsilon = dmap.length * math.pi / (2.0 * c * c)
    theta = -2.0 * c * math.sin(half) / dmap.length
    return MapJacobians(upsilon=upsilon, theta=theta)


def transform_derivatives(evaluation: NetEval, jac: MapJacobians) -> NetEval:
    """Convert x-space derivatives of a network evaluation to price space."""
    d1s = evaluation.d1 / jac.upsilon
    d2s = evaluation.d2 / (jac.upsilon * jac.upsilon) + jac.theta * evaluation.d1 / jac.upsilon
    return NetEval(value=evaluation.value, d1=d1s, d2=d2s)
