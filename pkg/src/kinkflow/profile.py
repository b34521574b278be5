"""Kink profile, cubic nonlinearity, multi-kink ansatz and the exponential weight."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Params:
    """Run parameters shared by the estimates.

    ``nu`` is derived from ``sigma`` and is not an independent input.
    """

    k: int = 2
    sigma: float = 1.0
    beta: float = 12.0 * SQRT2
    t0: float = -100.0
    nu: float = field(init=False)

    def __post_init__(self):
        check_even_k(self.k)
        if not SQRT2 / 2 < self.sigma < SQRT2:
            raise ValueError(f"sigma must lie in (sqrt(2)/2, sqrt(2)), got {self.sigma}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.t0 < 0:
            raise ValueError(f"t0 must be negative, got {self.t0}")
        object.__setattr__(self, "nu", (SQRT2 - self.sigma) / (2 * SQRT2))


def check_even_k(k: int) -> int:
    if int(k) != k or k < 2 or k % 2:
        raise ValueError(f"k must be an even integer >= 2, got {k}")
    return int(k)


def check_interfaces(xi, antisymmetric: bool = False, atol: float = 1e-10) -> np.ndarray:
    """Validate an ordered interface vector and return it as a float array."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 1:
        raise ValueError("interface vector must be a non-empty 1D array")
    if not np.all(np.isfinite(xi)):
        raise ValueError("interface positions must be finite")
    if np.any(np.diff(xi) <= 0):
        raise ValueError(f"interface positions must be strictly increasing: {xi}")
    if antisymmetric:
        defect = np.max(np.abs(xi + xi[::-1]))
        if defect > atol:
            raise ValueError(f"interfaces are not antisymmetric (defect {defect:.3e})")
    return xi


def _sech2(x):
    # 1 - tanh(x)^2 without cancellation in the tails
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def kink(x):
    """w(x) = tanh(x / sqrt 2), the heteroclinic from -1 to +1."""
    return np.tanh(np.asarray(x, dtype=float) / SQRT2)


def kink_deriv(x, order: int = 1):
    """Closed-form derivatives of the kink.

    With T = tanh(x/sqrt 2) and S = 1 - T^2:
        w'   = S / sqrt 2
        w''  = -T S          (= -f(w), the steady equation)
        w''' = -(1 - 3 T^2) w'
    """
    y = np.asarray(x, dtype=float) / SQRT2
    s = _sech2(y)
    if order == 1:
        return s / SQRT2
    t = np.tanh(y)
    if order == 2:
        return -t * s
    if order == 3:
        return -(1.0 - 3.0 * t * t) * s / SQRT2
    raise ValueError(f"order must be 1, 2 or 3, got {order}")


def nonlinearity(u, order: int = 0):
    """f(u) = u(1 - u^2) and f'(u) = 1 - 3u^2."""
    u = np.asarray(u, dtype=float)
    if order == 0:
        return u * (1.0 - u * u)
    if order == 1:
        return 1.0 - 3.0 * u * u
    raise ValueError(f"order must be 0 or 1, got {order}")


def kink_signs(k: int) -> np.ndarray:
    """(-1)^(j+1) for j = 1..k."""
    return np.where(np.arange(k) % 2 == 0, 1.0, -1.0)


def ansatz(x, xi) -> np.ndarray:
    """z(x) = sum_j (-1)^(j+1) w(x - xi_j) - 1."""
    xi = np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=float)
    signs = kink_signs(xi.size)
    shifted = x[..., None] - xi
    return np.sum(signs * kink(shifted), axis=-1) - 1.0


def phi_cells(x, xi0) -> np.ndarray:
    """0-based cell index of each x; cell j spans the midpoints around xi0_j.

    At an exact midpoint the left cell wins.
    """
    xi0 = np.asarray(xi0, dtype=float)
    mids = 0.5 * (xi0[:-1] + xi0[1:])
    return np.searchsorted(mids, np.asarray(x, dtype=float), side="left")


def weight_phi(x, xi0, sigma: float = 1.0) -> np.ndarray:
    """Piecewise exponential weight Phi.

    On cell j: exp(sigma(-x + xi0_{j-1})) + exp(sigma(x - xi0_{j+1})), where the
    term involving xi0_0 = -inf or xi0_{k+1} = +inf is dropped.
    """
    xi0 = check_interfaces(xi0)
    if not 0 < sigma < SQRT2:
        raise ValueError(f"sigma must lie in (0, sqrt(2)), got {sigma}")
    x = np.asarray(x, dtype=float)
    cell = phi_cells(x, xi0)
    # infinite neighbours make the dropped term exactly zero
    left = np.concatenate(([-np.inf], xi0))[cell]
    right = np.concatenate((xi0[1:], [np.inf]))[cell]
    return np.exp(sigma * (left - x)) + np.exp(sigma * (x - right))


def sup_ratio(values, weights) -> float:
    """max |values| / weights."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        raise ValueError("empty window")
    return float(np.max(np.abs(values) / weights))


def weighted_norm(fields: Sequence[np.ndarray], x, xi0_of_t: Sequence, sigma: float = 1.0) -> float:
    """Weighted sup norm ``max_{t,x} |u(t,x)| / Phi(t,x)`` over a time window.

    ``fields[i]`` and ``xi0_of_t[i]`` belong to the same time stamp.
    """
    if len(fields) == 0:
        raise ValueError("empty window")
    if len(fields) != len(xi0_of_t):
        raise ValueError("fields and interface positions must share time stamps")
    return max(sup_ratio(u, weight_phi(x, xi0, sigma)) for u, xi0 in zip(fields, xi0_of_t))
