"""Uniform 1D grids on a truncated symmetric interval."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Nodes ``x_i = -L + i*h`` for ``i = 0..n-1`` with ``h = 2L/(n-1)``."""

    half_width: float
    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        nodes = np.linspace(-self.half_width, self.half_width, self.n)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_spacing(cls, half_width: float, h: float) -> "Grid":
        """Grid on [-L, L] whose spacing is as close to ``h`` as an integer node count allows."""
        if not h > 0:
            raise ValueError(f"spacing must be positive, got {h}")
        n = int(round(2.0 * half_width / h)) + 1
        return cls(half_width, n)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid rule over the whole grid."""
        values = np.asarray(values, dtype=float)
        h = self.h
        return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return self.integrate(np.asarray(a) * np.asarray(b))

    def weights(self) -> np.ndarray:
        """Trapezoid weights, so that ``integrate(v) == weights() @ v``."""
        wts = np.full(self.n, self.h)
        wts[0] = wts[-1] = 0.5 * self.h
        return wts

    def describe(self) -> dict:
        return {"half_width": self.half_width, "n": self.n, "h": self.h}
