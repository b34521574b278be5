"""Finite-horizon solver for the projected linear problem

    psi_t = psi_xx + f'(z) psi + h - sum_i c_i w'(x - xi_i),    psi(s, .) = 0,

on a truncated interval with psi = 0 at both ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Grid
from .profile import ansatz, kink_deriv, nonlinearity, weight_phi
from .spectral import orthogonality_defect, project_out, projection_coeffs

Path = Callable[[float], tuple[np.ndarray, np.ndarray]]
Forcing = Callable[[float, np.ndarray, np.ndarray], np.ndarray]

FORCING_PRESETS = ("zero", "phi", "kinkprime")


class CFLViolation(ValueError):
    pass


@dataclass(frozen=True)
class SpaceTimeWindow:
    grid: Grid
    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"need t_start < t_end, got {self.t_start}, {self.t_end}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.steps + 1)


def forcing_preset(name: str, sigma: float = 1.0, xi0_path: Path | None = None) -> Forcing:
    """Named forcings ``h(t, x, xi)``.

    ``phi`` is the weight built on ``xi0_path`` (defaults to the current xi);
    ``kinkprime`` is w'(x - xi_1).
    """
    if name == "zero":
        return lambda t, x, xi: np.zeros_like(x)
    if name == "phi":
        def phi(t, x, xi):
            xi0 = xi if xi0_path is None else xi0_path(t)[0]
            return weight_phi(x, xi0, sigma)
        return phi
    if name == "kinkprime":
        return lambda t, x, xi: kink_deriv(x - xi[0], 1)
    raise ValueError(f"unknown forcing preset {name!r}; choose from {FORCING_PRESETS}")


@dataclass
class LinearSolution:
    times: np.ndarray
    psi: np.ndarray                 # snapshots, shape (n_snap, n_x)
    snapshot_times: np.ndarray
    c: np.ndarray                   # multipliers per step, shape (n_steps, k)
    defect_before: np.ndarray       # max_j |<psi, w'_j>| after the IMEX update
    defect_after: np.ndarray        # ... and after the projection step
    grid: Grid = field(repr=False)

    def weighted_norm(self, xi0_path: Path, sigma: float = 1.0, fields=None) -> float:
        """max over snapshots of |psi| / Phi."""
        fields = self.psi if fields is None else fields
        x = self.grid.nodes
        return max(
            float(np.max(np.abs(u) / weight_phi(x, xi0_path(t)[0], sigma)))
            for t, u in zip(self.snapshot_times, fields)
        )

    def max_defect(self) -> float:
        return float(np.max(self.defect_after)) if self.defect_after.size else 0.0


def _implicit_diffusion(n_interior: int, h: float, dt: float):
    r = dt / h**2
    main = np.full(n_interior, 1.0 + 2.0 * r)
    off = np.full(n_interior - 1, -r)
    return splu(sp.diags([off, main, off], [-1, 0, 1], format="csc"))


def solve_linear(
    window: SpaceTimeWindow,
    xi_path: Path,
    forcing: Forcing,
    with_projections: bool = True,
    scheme: str = "imex",
    snapshot_stride: int = 1,
) -> LinearSolution:
    """Time-step the projected linear problem from zero data.

    ``scheme="imex"``: implicit diffusion, explicit f'(z) psi and forcing.
    ``scheme="explicit"``: forward Euler throughout, needs dt <= h^2/2.
    With projections, c_i(t) from the nearly diagonal system is subtracted
    before each update, and one projection onto the complement of the
    translation modes at the new time follows it.
    """
    grid = window.grid
    x = grid.nodes
    h, dt = grid.h, window.dt
    if scheme not in ("imex", "explicit"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "explicit" and dt > 0.5 * h * h:
        raise CFLViolation(f"explicit scheme needs dt <= h^2/2 = {0.5 * h * h:.3g}, got {dt}")
    lu = _implicit_diffusion(grid.n - 2, h, dt) if scheme == "imex" else None

    times = window.times()
    psi = np.zeros(grid.n)
    snaps, snap_t = [psi.copy()], [times[0]]
    k = np.asarray(xi_path(times[0])[0]).size
    c_hist = np.zeros((window.steps, k))
    before = np.zeros(window.steps)
    after = np.zeros(window.steps)

    for n in range(window.steps):
        t = times[n]
        xi, xi_dot = xi_path(t)
        z = ansatz(x, xi)
        g = forcing(t, x, xi)
        if with_projections:
            c = projection_coeffs(psi, xi, xi_dot, g, z, grid)
            c_hist[n] = c
            g = g - c @ kink_deriv(x[None, :] - np.asarray(xi)[:, None], 1)
        rhs = psi + dt * (nonlinearity(z, 1) * psi + g)
        if lu is not None:
            psi_new = np.zeros_like(psi)
            psi_new[1:-1] = lu.solve(rhs[1:-1])
        else:
            lap = np.zeros_like(psi)
            lap[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / h**2
            psi_new = rhs + dt * lap
            psi_new[0] = psi_new[-1] = 0.0
        xi_next = xi_path(times[n + 1])[0]
        before[n] = np.max(np.abs(orthogonality_defect(psi_new, xi_next, grid)))
        if with_projections:
            psi_new = project_out(psi_new, xi_next, grid)
            psi_new[0] = psi_new[-1] = 0.0
        after[n] = np.max(np.abs(orthogonality_defect(psi_new, xi_next, grid)))
        psi = psi_new
        if (n + 1) % snapshot_stride == 0 or n + 1 == window.steps:
            snaps.append(psi.copy())
            snap_t.append(times[n + 1])

    return LinearSolution(times, np.array(snaps), np.array(snap_t), c_hist, before, after, grid)
