"""First-order Toda interface law.

    (1/beta) xi_j' = exp(-sqrt2 (xi_{j+1} - xi_j)) - exp(-sqrt2 (xi_j - xi_{j-1}))

with xi_0 = -inf and xi_{k+1} = +inf: the missing neighbour contributes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .constants import TodaConstants
from .profile import SQRT2, check_even_k, check_interfaces


class OrderingLost(RuntimeError):
    """Raised when two interfaces meet during integration."""

    def __init__(self, t: float, xi):
        self.t = t
        self.xi = np.asarray(xi)
        super().__init__(f"interface ordering lost at t={t:.6g}: xi={self.xi}")


class FixedPointDiverged(RuntimeError):
    pass


def gap_exponentials(xi) -> np.ndarray:
    return np.exp(-SQRT2 * np.diff(xi))


def toda_rhs(xi, beta: float) -> np.ndarray:
    """xi' for the first-order Toda system."""
    xi = check_interfaces(xi)
    g = gap_exponentials(xi)
    out = np.zeros_like(xi)
    out[:-1] += g
    out[1:] -= g
    return beta * out


def _rhs_list(x: list, beta: float) -> list:
    # pure-Python path: for k <= 12 this beats numpy's per-call overhead
    k = len(x)
    out = [0.0] * k
    for i in range(k - 1):
        g = math.exp(-SQRT2 * (x[i + 1] - x[i]))
        out[i] += g
        out[i + 1] -= g
    return [beta * o for o in out]


def _log_arg(t, consts: TodaConstants):
    return -consts.c_log * np.asarray(t, dtype=float)


def explicit_positions(t: float, consts: TodaConstants, validate: bool = True) -> np.ndarray:
    """xi0_j(t) = (j - (k+1)/2) log(-c_log t) / sqrt2 + gamma_j.

    With ``validate`` the log argument must exceed 1 and the result must be
    ordered; ``validate=False`` evaluates the formula anywhere with t < 0.
    """
    arg = float(_log_arg(t, consts))
    if validate and not arg > 1.0:
        raise ValueError(f"need -c_log*t > 1, got {arg:.6g} at t={t}")
    if not arg > 0:
        raise ValueError(f"t must be negative, got {t}")
    k = consts.k
    slope = (np.arange(1, k + 1) - (k + 1) / 2.0) / SQRT2
    xi = slope * math.log(arg) + consts.gamma
    if validate:
        check_interfaces(xi)
    return xi


def explicit_velocities(t: float, consts: TodaConstants) -> np.ndarray:
    """Time derivative of ``explicit_positions``."""
    k = consts.k
    return (np.arange(1, k + 1) - (k + 1) / 2.0) / (SQRT2 * t)


def explicit_path(consts: TodaConstants) -> Callable[[float], tuple[np.ndarray, np.ndarray]]:
    """``t -> (xi0(t), xi0'(t))`` for the explicit solution."""

    def path(t):
        return explicit_positions(t, consts), explicit_velocities(t, consts)

    return path


def toda_residual(path: Callable, beta: float, t_samples: Sequence[float]) -> float:
    """Max over samples and components of |(1/beta) xi' - R(xi)|.

    ``path(t)`` returns ``(xi, xi_dot)``; ordering is not required.
    """
    t_samples = list(t_samples)
    if not t_samples:
        raise ValueError("empty sample set")
    worst = 0.0
    for t in t_samples:
        xi, xi_dot = path(t)
        xi = np.asarray(xi, dtype=float)
        g = gap_exponentials(xi)
        drive = np.zeros_like(xi)
        drive[:-1] += g
        drive[1:] -= g
        worst = max(worst, float(np.max(np.abs(np.asarray(xi_dot) / beta - drive))))
    return worst


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped interface positions; ``states[i]`` is xi at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if times.ndim != 1 or states.shape[0] != times.size:
            raise ValueError("times and states must have the same length")
        if times.size > 1 and not (np.all(np.diff(times) > 0) or np.all(np.diff(times) < 0)):
            raise ValueError("times must be strictly monotone")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def k(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return self.times.size

    def gaps(self) -> np.ndarray:
        return np.diff(self.states, axis=1)

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation between stored stamps."""
        if self.times.size == 1:
            return self.states[0].copy()
        order = np.argsort(self.times)
        ts = self.times[order]
        if not ts[0] <= t <= ts[-1]:
            raise ValueError(f"t={t} outside trajectory range [{ts[0]}, {ts[-1]}]")
        return np.array([np.interp(t, ts, self.states[order, j]) for j in range(self.k)])

    def rows(self):
        for t, xi in zip(self.times, self.states):
            yield [float(t)] + [float(v) for v in xi]

    def header(self) -> list[str]:
        return ["t"] + [f"xi_{j}" for j in range(1, self.k + 1)]


def _time_nodes(t_start: float, t_end: float, step: float, t_eval) -> list[float]:
    n = int(math.floor((t_end - t_start) / step * (1 + 1e-12)))
    # t_start + i*step avoids drift from repeated addition
    nodes = [t_start + i * step for i in range(n + 1)]
    if t_end - nodes[-1] > 1e-9 * step:
        nodes.append(t_end)
    else:
        nodes[-1] = t_end
    if t_eval is not None:
        extra = [float(t) for t in t_eval if t_start < t < t_end]
        nodes = sorted(set(nodes).union(extra))
    return nodes


def integrate(
    xi_init,
    t_start: float,
    t_end: float,
    step: float,
    beta: float,
    t_eval: Sequence[float] | None = None,
    record_stride: int = 1,
) -> Trajectory:
    """Classical fixed-step RK4, forward in t; the last step is shortened to hit ``t_end``.

    State updates use compensated summation: the explicit Toda solution is
    unstable forward in time, so uncompensated rounding would be amplified.

    ``t_eval`` records exactly at the given times (steps are split there);
    otherwise every ``record_stride``-th step is kept along with the endpoints.
    """
    if not t_start < t_end < 0:
        raise ValueError(f"need t_start < t_end < 0, got {t_start}, {t_end}")
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x = list(check_interfaces(xi_init))
    k = len(x)
    comp = [0.0] * k
    nodes = _time_nodes(t_start, t_end, step, t_eval)
    wanted = None if t_eval is None else {float(t) for t in t_eval}

    times, states = [], []

    def record(i, t):
        if wanted is not None:
            keep = t in wanted
        else:
            keep = i % record_stride == 0 or i == len(nodes) - 1
        if keep:
            times.append(t)
            states.append(list(x))

    record(0, nodes[0])
    for i in range(1, len(nodes)):
        h = nodes[i] - nodes[i - 1]
        try:
            k1 = _rhs_list(x, beta)
            k2 = _rhs_list([a + 0.5 * h * d for a, d in zip(x, k1)], beta)
            k3 = _rhs_list([a + 0.5 * h * d for a, d in zip(x, k2)], beta)
            k4 = _rhs_list([a + h * d for a, d in zip(x, k3)], beta)
        except OverflowError:
            # a stage state has crossed interfaces far enough to overflow exp
            raise OrderingLost(nodes[i], x) from None
        for j in range(k):
            y = h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0 - comp[j]
            s = x[j] + y
            comp[j] = (s - x[j]) - y
            x[j] = s
        for j in range(k - 1):
            if not x[j + 1] > x[j]:
                raise OrderingLost(nodes[i], x)
        record(i, nodes[i])
    return Trajectory(np.array(times), np.array(states))


# ---------------------------------------------------------------------------
# gap/sum reduction and the linearised correction problem


def change_of_variables(k: int) -> np.ndarray:
    """B: rows 1..k-1 give the gaps xi_{l+1} - xi_l, row k the sum."""
    B = np.zeros((k, k))
    for l in range(k - 1):
        B[l, l] = -1.0
        B[l, l + 1] = 1.0
    B[-1, :] = 1.0
    return B


def interaction_matrix(m: int) -> np.ndarray:
    """C: (m x m) tridiagonal with 2 on the diagonal and -1 off it."""
    return 2.0 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)


def interaction_eigenvalues(m: int) -> np.ndarray:
    """Closed form 2 - 2 cos(j pi / (m+1)), j = 1..m, ascending."""
    j = np.arange(1, m + 1)
    return 2.0 - 2.0 * np.cos(j * np.pi / (m + 1))


def spd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric positive-definite square root via eigendecomposition."""
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    if np.any(vals <= 0):
        raise np.linalg.LinAlgError(f"matrix is not positive definite: min eigenvalue {vals.min()}")
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (root + root.T)


def R_operator(xi) -> np.ndarray:
    """R_j(xi) = -exp(-sqrt2(xi_{j+1} - xi_j)) + exp(-sqrt2(xi_j - xi_{j-1}))."""
    xi = np.asarray(xi, dtype=float)
    g = gap_exponentials(xi)
    out = np.zeros_like(xi)
    out[:-1] -= g
    out[1:] += g
    return out


@dataclass(frozen=True)
class ReductionPipeline:
    B: np.ndarray
    C: np.ndarray
    C_half: np.ndarray
    A: np.ndarray
    lambdas: np.ndarray
    Lambda: np.ndarray
    a: np.ndarray

    @property
    def k(self) -> int:
        return self.B.shape[0]

    def S_bar(self, vbar) -> np.ndarray:
        """Reduced gap operator C (exp(-sqrt2 v_l))_l."""
        return self.C @ np.exp(-SQRT2 * np.asarray(vbar, dtype=float))

    def S(self, v) -> np.ndarray:
        """B R(B^-1 v)."""
        return self.B @ R_operator(np.linalg.solve(self.B, np.asarray(v, dtype=float)))

    def S_bar_jacobian(self, vbar) -> np.ndarray:
        """D S_bar(v) = -sqrt2 C diag(exp(-sqrt2 v))."""
        return -SQRT2 * self.C * np.exp(-SQRT2 * np.asarray(vbar, dtype=float))[None, :]

    def as_dict(self) -> dict:
        return {
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "C_half": self.C_half.tolist(),
            "A": self.A.tolist(),
            "lambdas": self.lambdas.tolist(),
            "Lambda": self.Lambda.tolist(),
            "a": self.a.tolist(),
        }


def build_reduction(k: int, consts: TodaConstants) -> ReductionPipeline:
    """Matrices B, C, C^(1/2), A = C^(1/2) diag(a) C^(1/2) and A's eigenpairs."""
    k = check_even_k(k)
    if consts.k != k:
        raise ValueError(f"constants were built for k={consts.k}, not {k}")
    B = change_of_variables(k)
    C = interaction_matrix(k - 1)
    C_half = spd_sqrt(C)
    A = C_half @ np.diag(consts.a) @ C_half
    A = 0.5 * (A + A.T)
    lambdas, Lambda = np.linalg.eigh(A)
    if np.any(lambdas <= 0):
        raise np.linalg.LinAlgError(f"A has non-positive eigenvalues: {lambdas}")
    return ReductionPipeline(B, C, C_half, A, lambdas, Lambda, np.array(consts.a))


@dataclass
class FixedPointResult:
    t: np.ndarray
    omega: np.ndarray       # shape (m, n)
    omega_dot: np.ndarray
    iterations: int
    increments: list[float]  # Lambda-norm of successive differences

    def lambda_norm(self) -> np.ndarray:
        """sup|omega| + sup|t||omega'| per component."""
        return lambda_norm(self.t, self.omega, self.omega_dot)

    def contraction_ratios(self) -> np.ndarray:
        inc = np.asarray(self.increments)
        return inc[1:] / inc[:-1] if inc.size > 1 else np.array([])


def lambda_norm(t, h, h_dot) -> np.ndarray:
    t = np.asarray(t)
    return np.max(np.abs(h), axis=-1) + np.max(np.abs(t) * np.abs(h_dot), axis=-1)


def _cumulative_from_right(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """I[i] = int_{t_i}^{t_end} g ds by the trapezoid rule (last column is zero)."""
    dt = np.diff(t)
    panels = 0.5 * dt * (g[..., 1:] + g[..., :-1])
    out = np.zeros_like(g)
    out[..., :-1] = np.cumsum(panels[..., ::-1], axis=-1)[..., ::-1]
    return out


def _check_decay(t: np.ndarray, gamma0: np.ndarray):
    mag = np.max(np.abs(gamma0), axis=0)
    if not np.any(mag > 0):
        return
    far = slice(0, max(t.size // 2, 2))
    tt, mm = -t[far], mag[far]
    ok = mm > 0
    if ok.sum() < 2 or np.ptp(np.log(tt[ok])) == 0:
        return
    slope = np.polyfit(np.log(tt[ok]), np.log(mm[ok]), 1)[0]
    if slope > -0.5:
        raise ValueError(f"forcing decays like |t|^{slope:.3f}; need faster than |t|^-1/2")


def correction_fixed_point(
    forcing: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    lambdas,
    t0: float,
    t_grid,
    max_iter: int = 50,
    tol: float = 1e-12,
) -> FixedPointResult:
    """Iterate omega_i(t) = -(-t)^(-sqrt l_i) int_t^{t0} (-s)^(sqrt l_i) Gamma_i(omega', omega) ds.

    ``forcing(t, omega, omega_dot)`` returns an (m, n) array; omega' is lagged
    one iteration and taken by finite differences on ``t_grid`` (centred inside,
    one-sided at the ends).  ``t_grid`` must be increasing and end at ``t0 < 0``,
    the time at which omega vanishes.  Convergence is measured in the norm
    sup|d| + sup|t||d'| of successive differences.
    """
    t = np.asarray(t_grid, dtype=float)
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if not t0 < 0:
        raise ValueError(f"t0 must be negative, got {t0}")
    if t.ndim != 1 or t.size < 3 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing with at least 3 points")
    if not math.isclose(t[-1], t0, rel_tol=1e-14, abs_tol=0.0) or t[-1] > t0:
        raise ValueError(f"t_grid must end at t0={t0}, got {t[-1]}")
    if np.any(lam <= 0):
        raise ValueError("lambdas must be positive")
    m, n = lam.size, t.size
    p = np.sqrt(lam)[:, None]
    weight = (-t)[None, :] ** p

    omega = np.zeros((m, n))
    omega_dot = np.zeros((m, n))
    increments = []
    for it in range(1, max_iter + 1):
        gam = np.asarray(forcing(t, omega, omega_dot), dtype=float).reshape(m, n)
        if it == 1:
            _check_decay(t, gam)
        new = -_cumulative_from_right(t, weight * gam) / weight
        new_dot = np.gradient(new, t, axis=-1)
        inc = float(np.max(lambda_norm(t, new - omega, new_dot - omega_dot)))
        omega, omega_dot = new, new_dot
        increments.append(inc)
        if not np.isfinite(inc):
            raise FixedPointDiverged("iterate is not finite")
        if inc < tol:
            return FixedPointResult(t, omega, omega_dot, it, increments)
    raise FixedPointDiverged(f"no convergence in {max_iter} iterations (last increment {increments[-1]:.3e})")
