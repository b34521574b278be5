"""Linearised operator around a kink, its spectral gap, and the translation-mode projections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

from .grid import Grid
from .profile import check_interfaces, kink, kink_deriv, nonlinearity

MAX_SPACING = 0.1
MIN_MARGIN = 15.0


class SingularProjection(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix acting on the interior nodes (Dirichlet ends)."""

    diag: np.ndarray
    offdiag: np.ndarray
    x: np.ndarray  # interior nodes

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_sparse(self) -> sp.csc_matrix:
        return sp.diags([self.offdiag, self.diag, self.offdiag], [-1, 0, 1], format="csc")

    def rayleigh(self, v: np.ndarray) -> float:
        return float(v @ self.matvec(v) / (v @ v))


def linearized_operator(grid: Grid, center: float = 0.0, background=None) -> TridiagonalOperator:
    """Centred-difference discretisation of zeta -> -zeta'' - f'(u) zeta.

    ``u`` is the kink w(x - center) unless ``background`` gives the field values
    on the full grid.
    """
    h = grid.h
    if h > MAX_SPACING:
        raise ValueError(f"grid spacing {h:.4g} does not resolve the kink (need h <= {MAX_SPACING})")
    x = grid.nodes[1:-1]
    if background is None:
        if grid.half_width < abs(center) + 20.0:
            raise ValueError(f"half width {grid.half_width} must be at least |center| + 20")
        u = kink(x - center)
    else:
        u = np.asarray(background, dtype=float)[1:-1]
    diag = 2.0 / h**2 - nonlinearity(u, 1)
    off = np.full(x.size - 1, -1.0 / h**2)
    return TridiagonalOperator(diag, off, x)


@dataclass
class SpectralGap:
    lambda0: float
    lambda1: float
    gap_on_complement: float
    mode0: np.ndarray
    mode1: np.ndarray
    zero_mode_cosine: float
    x: np.ndarray

    def summary(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "gap_on_complement": self.gap_on_complement,
            "zero_mode_cosine": self.zero_mode_cosine,
        }


def lowest_eigenpairs(op: TridiagonalOperator, count: int = 2):
    """Lowest eigenpairs by bisection and inverse iteration (LAPACK stebz/stein)."""
    vals, vecs = eigh_tridiagonal(
        op.diag, op.offdiag, select="i", select_range=(0, count - 1), lapack_driver="stebz"
    )
    return vals, vecs


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def complement_minimum(op: TridiagonalOperator, constraint: np.ndarray, seed: int = 0, tol: float = 1e-9) -> float:
    """min of the Rayleigh quotient over vectors orthogonal to ``constraint``.

    Constrained LOBPCG preconditioned by a sparse LU of (op + I).
    """
    A = op.to_sparse()
    n = A.shape[0]
    lu = splu((A + sp.identity(n, format="csc")).tocsc())
    M = LinearOperator((n, n), matvec=lu.solve, dtype=float)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 1))
    Y = np.asarray(constraint, dtype=float).reshape(n, 1)
    vals = lobpcg(A, X, B=None, M=M, Y=Y, tol=tol, maxiter=500, largest=False)[0]
    return float(np.min(vals))


def spectral_gap(grid: Grid, center: float = 0.0, seed: int = 0) -> SpectralGap:
    """Two lowest eigenvalues and the gap on the complement of the translation mode w'."""
    op = linearized_operator(grid, center)
    vals, vecs = lowest_eigenpairs(op, 2)
    wp = kink_deriv(op.x - center, 1)
    gap = complement_minimum(op, wp, seed=seed)
    mode0 = vecs[:, 0] * np.sign(vecs[:, 0] @ wp)
    return SpectralGap(
        lambda0=float(vals[0]),
        lambda1=float(vals[1]),
        gap_on_complement=gap,
        mode0=mode0,
        mode1=vecs[:, 1],
        zero_mode_cosine=cosine(mode0, wp),
        x=op.x,
    )


def random_smooth_fields(x: np.ndarray, count: int, seed: int = 0, bumps: int = 3) -> np.ndarray:
    """Sums of random Gaussian bumps; rows are fields sampled on ``x``."""
    rng = np.random.default_rng(seed)
    out = np.zeros((count, x.size))
    for i in range(count):
        centers = rng.uniform(-8.0, 8.0, bumps)
        widths = rng.uniform(0.5, 3.0, bumps)
        amps = rng.standard_normal(bumps)
        out[i] = np.sum(amps[:, None] * np.exp(-(((x[None, :] - centers[:, None]) / widths[:, None]) ** 2)), axis=0)
    return out


def rayleigh_trials(grid: Grid, trials: int = 100, seed: int = 0, center: float = 0.0) -> np.ndarray:
    """Rayleigh quotients of random smooth fields made orthogonal to w'."""
    op = linearized_operator(grid, center)
    wp = kink_deriv(op.x - center, 1)
    wp = wp / np.linalg.norm(wp)
    fields = random_smooth_fields(op.x - center, trials, seed)
    quotients = np.empty(trials)
    for i, zeta in enumerate(fields):
        zeta = zeta - (zeta @ wp) * wp
        quotients[i] = op.rayleigh(zeta)
    return quotients


# ---------------------------------------------------------------------------
# translation modes w'(x - xi_j)


def _check_margin(grid: Grid, xi: np.ndarray, margin: float = MIN_MARGIN):
    if xi[0] - margin < -grid.half_width - 1e-12 or xi[-1] + margin > grid.half_width + 1e-12:
        raise ValueError(
            f"interfaces [{xi[0]:.3f}, {xi[-1]:.3f}] need a margin of {margin} inside [-{grid.half_width}, {grid.half_width}]"
        )


def translation_modes(grid: Grid, xi, order: int = 1) -> np.ndarray:
    """Rows w^(order)(x - xi_j) on the grid."""
    xi = np.asarray(xi, dtype=float)
    return kink_deriv(grid.nodes[None, :] - xi[:, None], order)


def gram_matrix(xi, grid: Grid, check_margin: bool = True) -> np.ndarray:
    """G_ij = int w'(x - xi_i) w'(x - xi_j) dx by the trapezoid rule."""
    xi = check_interfaces(xi)
    if check_margin:
        _check_margin(grid, xi)
    modes = translation_modes(grid, xi)
    G = (modes * grid.weights()) @ modes.T
    return 0.5 * (G + G.T)


def _solve_gram(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularProjection(f"Gram matrix is singular (condition number {cond:.3e})")
    return np.linalg.solve(G, rhs)


def projection_coeffs(psi, xi, xi_dot, forcing, z_field, grid: Grid) -> np.ndarray:
    """Multipliers c_i keeping psi orthogonal to every w'(x - xi_j).

    Solves sum_i c_i <w'_i, w'_j> = <(f'(z) - f'(w_j)) psi, w'_j>
                                    - xi_j' <psi, w''_j> + <forcing, w'_j>,
    where the first term is the integrated-by-parts form of
    <psi_xx + f'(z) psi, w'_j> (uses w''' = -f'(w) w').
    """
    xi = check_interfaces(xi)
    psi = np.asarray(psi, dtype=float)
    forcing = np.asarray(forcing, dtype=float)
    fz = nonlinearity(np.asarray(z_field, dtype=float), 1)
    x = grid.nodes
    wts = grid.weights()
    shifted = x[None, :] - xi[:, None]
    w1 = kink_deriv(shifted, 1)
    w2 = kink_deriv(shifted, 2)
    fw = nonlinearity(kink(shifted), 1)
    rhs = (
        ((fz[None, :] - fw) * psi[None, :] * w1) @ wts
        - np.asarray(xi_dot, dtype=float) * ((psi[None, :] * w2) @ wts)
        + (forcing[None, :] * w1) @ wts
    )
    G = (w1 * wts) @ w1.T
    return _solve_gram(0.5 * (G + G.T), rhs)


def orthogonality_defect(psi, xi, grid: Grid) -> np.ndarray:
    """<psi, w'(x - xi_j)> for every j."""
    modes = translation_modes(grid, xi)
    return (modes * grid.weights()) @ np.asarray(psi, dtype=float)


def project_out(psi, xi, grid: Grid) -> np.ndarray:
    """psi - sum_i l_i w'(x - xi_i) with l chosen so the result is orthogonal to each w'_j."""
    xi = check_interfaces(xi)
    psi = np.asarray(psi, dtype=float)
    modes = translation_modes(grid, xi)
    weighted = modes * grid.weights()
    G = weighted @ modes.T
    lam = _solve_gram(0.5 * (G + G.T), weighted @ psi)
    return psi - lam @ modes


def kink_zero_mode_norm() -> float:
    """int (w')^2 dx = 2 sqrt2 / 3."""
    return 2.0 * math.sqrt(2.0) / 3.0
