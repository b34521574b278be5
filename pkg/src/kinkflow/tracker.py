"""Interface extraction, the ansatz error term, and PDE-versus-Toda comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .profile import SQRT2, ansatz, check_interfaces, kink, kink_deriv, kink_signs, nonlinearity
from .toda import Trajectory

PERSISTENCE = 3


class InterfaceCountError(ValueError):
    def __init__(self, expected: int, found):
        self.expected = expected
        self.found = np.asarray(found, dtype=float)
        locs = ", ".join(f"{v:.4f}" for v in self.found)
        super().__init__(f"expected {expected} zero crossings, found {self.found.size}: [{locs}]")


def _sign_runs(signs: np.ndarray):
    """(start, stop, sign) for maximal runs of equal sign."""
    edges = np.flatnonzero(np.diff(signs)) + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [signs.size]))
    return [[int(a), int(b), int(signs[a])] for a, b in zip(starts, stops)]


def zero_crossings(u, x, persistence: int = PERSISTENCE) -> np.ndarray:
    """Zeros of ``u`` between sign runs at least ``persistence`` nodes long.

    Shorter interior runs are treated as noise and absorbed into their
    neighbours before crossings are located. Exact zeros count as positive,
    so a node where u == 0 is reported as the crossing itself.
    """
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    signs = np.where(u >= 0, 1, -1)
    runs = _sign_runs(signs)
    changed = True
    while changed and len(runs) > 1:
        changed = False
        for i in range(1, len(runs) - 1):
            a, b, _ = runs[i]
            if b - a < persistence:
                runs[i - 1][1] = runs[i + 1][1]
                del runs[i : i + 2]
                changed = True
                break
    out = []
    for left, right in zip(runs[:-1], runs[1:]):
        i, j = left[1] - 1, right[0]
        ui, uj = u[i], u[j]
        out.append(x[i] + (x[j] - x[i]) * ui / (ui - uj))
    return np.array(out)


def find_interfaces(field, expected_k: int, x, persistence: int = PERSISTENCE) -> np.ndarray:
    """Ordered zeros of ``field``; raises unless exactly ``expected_k`` are found."""
    found = zero_crossings(field, x, persistence)
    if found.size != expected_k:
        raise InterfaceCountError(expected_k, found)
    return found


def error_term(grid: Grid, xi, xi_dot) -> np.ndarray:
    """E = sum_j s_j w'(x - xi_j) xi_j' + f(z) - sum_j s_j f(w(x - xi_j)), s_j = (-1)^(j+1)."""
    xi = check_interfaces(xi)
    xi_dot = np.asarray(xi_dot, dtype=float)
    if xi_dot.shape != xi.shape:
        raise ValueError("xi and xi_dot must have the same length")
    x = grid.nodes
    s = kink_signs(xi.size)[:, None]
    shifted = x[None, :] - xi[:, None]
    moving = np.sum(s * kink_deriv(shifted, 1) * xi_dot[:, None], axis=0)
    interaction = nonlinearity(ansatz(x, xi), 0) - np.sum(s * nonlinearity(kink(shifted), 0), axis=0)
    return moving + interaction


def nonlinear_remainder(psi, z_field) -> np.ndarray:
    """N(psi) = f(psi + z) - f(z) - f'(z) psi."""
    psi = np.asarray(psi, dtype=float)
    z = np.asarray(z_field, dtype=float)
    if psi.shape != z.shape:
        raise ValueError("psi and z must share a grid")
    return nonlinearity(psi + z, 0) - nonlinearity(z, 0) - nonlinearity(z, 1) * psi


def track(times, fields, x, expected_k: int) -> Trajectory:
    """Interfaces of every snapshot as a trajectory."""
    return Trajectory(np.asarray(times, dtype=float), np.array([find_interfaces(u, expected_k, x) for u in fields]))


def frozen_trajectory(xi, times) -> Trajectory:
    """A prediction that never moves: xi at every stamp."""
    times = np.asarray(times, dtype=float)
    return Trajectory(times, np.tile(np.asarray(xi, dtype=float), (times.size, 1)))


@dataclass
class Comparison:
    max_deviation: np.ndarray   # per interface
    mean_deviation: np.ndarray
    gap_change_observed: np.ndarray   # last minus first, per gap
    gap_change_predicted: np.ndarray  # same for the other trajectory
    gap_change_explicit: float        # (1/sqrt2) log(t_end / t_start)
    law_slope: np.ndarray             # gap ~ slope * log(-c t)/sqrt2 + intercept, per gap
    law_intercept: np.ndarray

    @property
    def worst(self) -> float:
        return float(np.max(self.max_deviation))

    def as_dict(self) -> dict:
        return {
            "max_deviation": self.worst,
            "max_deviation_per_interface": self.max_deviation.tolist(),
            "mean_deviation_per_interface": self.mean_deviation.tolist(),
            "gap_change_observed": self.gap_change_observed.tolist(),
            "gap_change_predicted": self.gap_change_predicted.tolist(),
            "gap_change_explicit": self.gap_change_explicit,
            "law_slope": self.law_slope.tolist(),
            "law_intercept": self.law_intercept.tolist(),
        }


def compare_trajectories(observed: Trajectory, predicted: Trajectory, c_log: float = 1.0) -> Comparison:
    """Deviation statistics between two trajectories with identical stamps.

    The separation law is fitted by least squares of each observed gap
    against log(-c_log t)/sqrt2; the explicit solution has slope 1.
    """
    if observed.k != predicted.k:
        raise ValueError(f"trajectories have k={observed.k} and k={predicted.k}")
    if observed.times.shape != predicted.times.shape or not np.allclose(
        observed.times, predicted.times, rtol=0, atol=1e-9
    ):
        raise ValueError("trajectories must share time stamps")
    dev = np.abs(observed.states - predicted.states)
    g_obs, g_pred = observed.gaps(), predicted.gaps()
    t = observed.times
    t0, t1 = t[0], t[-1]
    if t1 < 0 and t0 < 0:
        explicit = math.log(t1 / t0) / SQRT2
    else:
        explicit = float("nan")
    m = g_obs.shape[1]
    slope, intercept = np.full(m, np.nan), np.full(m, np.nan)
    if t.size >= 2 and np.all(t < 0):
        s = np.log(-c_log * t) / SQRT2
        if np.ptp(s) > 0:
            for l in range(m):
                slope[l], intercept[l] = np.polyfit(s, g_obs[:, l], 1)
    return Comparison(
        max_deviation=dev.max(axis=0),
        mean_deviation=dev.mean(axis=0),
        gap_change_observed=g_obs[-1] - g_obs[0],
        gap_change_predicted=g_pred[-1] - g_pred[0],
        gap_change_explicit=explicit,
        law_slope=slope,
        law_intercept=intercept,
    )
