"""Forward-in-time Allen-Cahn simulation u_t = u_xx + u(1 - u^2)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Grid
from .profile import ansatz, check_interfaces, nonlinearity

log = logging.getLogger(__name__)

DEFAULT_H = 0.05
DEFAULT_DT = 0.01
DEFAULT_MARGIN = 15.0
BLOWUP = 2.0


class SimulationBlowUp(RuntimeError):
    pass


def domain_half_width(xi, margin: float = DEFAULT_MARGIN) -> float:
    xi = np.asarray(xi, dtype=float)
    return float(max(abs(xi[0]), abs(xi[-1])) + margin)


def initial_field(grid: Grid, xi, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """The multi-kink ansatz sampled on the grid."""
    xi = check_interfaces(xi)
    if xi[0] - margin < -grid.half_width - 1e-9 or xi[-1] + margin > grid.half_width + 1e-9:
        raise ValueError(f"interfaces need a margin of {margin} inside the grid")
    return ansatz(grid.nodes, xi)


@dataclass
class Simulation:
    grid: Grid = field(repr=False)
    times: np.ndarray
    fields: np.ndarray  # (n_snap, n_x)
    dt: float
    boundary: str


def energy(u, grid: Grid) -> float:
    """int u_x^2/2 + (1 - u^2)^2/4 dx (midpoint gradient, trapezoid potential)."""
    u = np.asarray(u, dtype=float)
    grad = np.diff(u) / grid.h
    return float(0.5 * grid.h * np.sum(grad**2) + grid.integrate(0.25 * (1.0 - u * u) ** 2))


def _dirichlet_solver(n_int: int, r: float):
    main = np.full(n_int, 1.0 + 2.0 * r)
    off = np.full(n_int - 1, -r)
    return splu(sp.diags([off, main, off], [-1, 0, 1], format="csc"))


def _neumann_solver(n: int, r: float):
    main = np.full(n, 1.0 + 2.0 * r)
    upper = np.full(n - 1, -r)
    lower = np.full(n - 1, -r)
    # ghost-node reflection u_{-1} = u_1
    upper[0] = -2.0 * r
    lower[-1] = -2.0 * r
    return splu(sp.diags([lower, main, upper], [-1, 0, 1], format="csc"))


def evolve(
    u0,
    grid: Grid,
    t_start: float,
    t_end: float,
    dt: float = DEFAULT_DT,
    snapshot_stride: int = 100,
    boundary: str = "dirichlet",
    boundary_values: tuple[float, float] = (-1.0, -1.0),
) -> Simulation:
    """IMEX Euler: implicit diffusion, explicit cubic reaction.

    Snapshots are kept every ``snapshot_stride`` steps plus both endpoints.
    ``boundary="dirichlet"`` pins the end values to ``boundary_values``;
    ``"neumann"`` imposes zero flux instead.
    """
    if not t_start < t_end <= 0:
        raise ValueError(f"need t_start < t_end <= 0, got {t_start}, {t_end}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u = np.array(u0, dtype=float)
    if u.shape != (grid.n,):
        raise ValueError("initial field does not match the grid")
    if np.any(np.abs(u) > 1.0 + 1e-12):
        raise ValueError("initial values must lie in [-1, 1]")
    if dt > 0.25:
        log.warning("dt=%g is large for the explicit reaction term (|f'| <= 2)", dt)
    if dt > 10.0 * grid.h:
        log.warning("dt=%g is much larger than h=%g; time error will dominate", dt, grid.h)

    steps = int(round((t_end - t_start) / dt))
    r = dt / grid.h**2
    left, right = boundary_values
    if boundary == "dirichlet":
        lu = _dirichlet_solver(grid.n - 2, r)
        u[0], u[-1] = left, right
    elif boundary == "neumann":
        lu = _neumann_solver(grid.n, r)
    else:
        raise ValueError(f"unknown boundary {boundary!r}")

    times = [t_start]
    snaps = [u.copy()]
    for n in range(1, steps + 1):
        rhs = u + dt * nonlinearity(u, 0)
        if boundary == "dirichlet":
            inner = rhs[1:-1]
            inner[0] += r * left
            inner[-1] += r * right
            u[1:-1] = lu.solve(inner)
        else:
            u = lu.solve(rhs)
        if n % snapshot_stride == 0 or n == steps:
            if not np.all(np.abs(u) <= BLOWUP):
                raise SimulationBlowUp(f"|u| exceeded {BLOWUP} at t={t_start + n * dt:.6g}")
            times.append(t_start + n * dt)
            snaps.append(u.copy())
    return Simulation(grid, np.array(times), np.array(snaps), dt, boundary)
