"""The interaction constant beta and the constants of the explicit Toda solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .profile import SQRT2, check_even_k, kink, kink_deriv

NODES_PER_UNIT = 64
DEFAULT_HALF_WIDTH = 40.0

NORMALIZATIONS = ("residual", "paper")


def _numerator_integrand(x):
    w = kink(x)
    return 6.0 * np.exp(SQRT2 * x) * (1.0 - w * w) * kink_deriv(x, 1)


def _denominator_integrand(x):
    return kink_deriv(x, 1) ** 2


def _tail_bounds(R: float) -> tuple[float, float]:
    """Analytic bounds on the integrals outside [-R, R].

    Both use sech^4(y) <= 16 exp(-4|y|) with y = x/sqrt 2.  The numerator
    integrand is at most (96/sqrt 2) exp(-sqrt2 x) for x > 0 and
    (96/sqrt 2) exp(3 sqrt2 x) for x < 0; the denominator is at most
    8 exp(-2 sqrt2 |x|).
    """
    num = 48.0 * math.exp(-SQRT2 * R) + 16.0 * math.exp(-3.0 * SQRT2 * R)
    den = (8.0 / SQRT2) * math.exp(-2.0 * SQRT2 * R)
    return num, den


def composite_gauss_legendre(func, a: float, b: float, panels: int, order: int = NODES_PER_UNIT) -> float:
    """Composite Gauss-Legendre rule with ``panels`` equal subintervals."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = mid[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(half[:, None] * weights[None, :] * func(x)))


@dataclass(frozen=True)
class BetaIntegrals:
    numerator: float
    denominator: float
    half_width: float
    tail_bound_numerator: float
    tail_bound_denominator: float

    @property
    def beta(self) -> float:
        return self.numerator / self.denominator


def beta_integrals(abs_tol: float = 1e-10, half_width: float = DEFAULT_HALF_WIDTH) -> BetaIntegrals:
    """Both integrals of beta, truncated where the analytic tail bound is below ``abs_tol``."""
    if not abs_tol > 0:
        raise ValueError(f"abs_tol must be positive, got {abs_tol}")
    R = float(half_width)
    while max(_tail_bounds(R)) > abs_tol:
        R *= 2.0
    panels = int(math.ceil(2 * R))
    num = composite_gauss_legendre(_numerator_integrand, -R, R, panels)
    den = composite_gauss_legendre(_denominator_integrand, -R, R, panels)
    tn, td = _tail_bounds(R)
    return BetaIntegrals(num, den, R, tn, td)


def compute_beta(abs_tol: float = 1e-10) -> float:
    """beta = 6 int e^{sqrt2 x}(1 - w^2) w' dx / int (w')^2 dx  (closed form 12 sqrt 2)."""
    return beta_integrals(abs_tol).beta


@dataclass(frozen=True)
class TodaConstants:
    """Constants of xi0_j(t) = (j - (k+1)/2) log(-c_log t) / sqrt2 + gamma_j."""

    k: int
    beta: float
    c_log: float
    b: np.ndarray
    gamma: np.ndarray
    a: np.ndarray
    e: np.ndarray  # gap exponentials exp(-sqrt2 b_l)
    normalization: str

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "beta": self.beta,
            "c_log": self.c_log,
            "normalization": self.normalization,
            "b": self.b.tolist(),
            "gamma": self.gamma.tolist(),
            "a": self.a.tolist(),
            "gap_exponentials": self.e.tolist(),
        }


def gamma_from_gaps(b: np.ndarray) -> np.ndarray:
    """Offsets gamma_j = -1/2 sum_{i=j}^{k-j} b_i for j <= k/2, odd-extended."""
    k = b.size + 1
    gamma = np.zeros(k)
    for j in range(1, k // 2 + 1):
        # b is 0-based: b_i lives at b[i-1]; the sum is inclusive of i = k - j
        gamma[j - 1] = -0.5 * np.sum(b[j - 1 : k - j])
        gamma[k - j] = -gamma[j - 1]
    return gamma


def toda_constants(k: int, beta: float, normalization: str = "residual") -> TodaConstants:
    """Constants making xi0 an exact solution of the first-order Toda system.

    Substituting xi0 into the system gives, for the gap exponentials
    e_l = exp(-sqrt2 b_l), the telescoping relation
        e_j - e_{j-1} = -(c_log / beta) (j - (k+1)/2) / sqrt2,   e_0 = e_k = 0,
    which with c_log = 2 sqrt2 beta yields e_l = l(k - l).

    ``normalization="paper"`` instead uses b_l = -log(l(k-l)/(2 beta))/sqrt2
    with the same c_log; that pairing is not a solution and is kept only to
    report the discrepancy.
    """
    k = check_even_k(k)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    c_log = 2.0 * SQRT2 * beta
    l = np.arange(1, k)
    a = (k - l) * l / (2.0 * beta)
    if normalization == "residual":
        kappa = c_log / (beta * SQRT2)
        # integer partial sums of (2j - k - 1) keep e_k == 0 exact
        steps = 2 * np.arange(1, k + 1) - (k + 1)
        e_all = -0.5 * kappa * np.cumsum(steps).astype(float)
        if e_all[-1] != 0.0:
            raise RuntimeError("telescoping sum did not close")
        e = e_all[:-1]
        if np.any(e <= 0):
            raise RuntimeError(f"non-positive gap exponential: {e}")
        b = -np.log(e) / SQRT2
    else:
        e = (k - l) * l / (2.0 * beta)
        b = -np.log(e) / SQRT2
    return TodaConstants(k, float(beta), c_log, b, gamma_from_gaps(b), a, e, normalization)
