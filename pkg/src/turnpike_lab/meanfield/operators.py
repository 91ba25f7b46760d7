"""Linearized operators at the stationary density: Hessian, weighted Laplacian,
and the Rayleigh escape rate.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve

from ..attention import AttentionSpec, kernel_matrix
from ..errors import ZeroGradientError
from .grid import CircleDensity, CircleGrid, GridOperator

MEAN_INPUT_TOL = 1e-8


class HessianOperator:
    """The curvature operator H h = eps h - Pi_0 (integral of the kernel against h d mu).

    Acts on functions with zero mean under the stationary measure; self-adjoint
    in L^2(mu). ``solve_hinv`` inverts H on that subspace through a deflated
    dense factorization (the mean constraint is appended as a Lagrange row).
    """

    def __init__(self, rho_bar: CircleDensity, A: AttentionSpec, eps: float):
        if np.any(rho_bar.values <= 0):
            raise ValueError("Hessian requires a strictly positive stationary density")
        self.rho_bar = rho_bar
        self.A = A
        self.eps = eps
        grid = rho_bar.grid
        M = grid.M
        w = rho_bar.weights()
        self.w = w
        K = kernel_matrix(grid.points, grid.points, A)
        kw = K * w[None, :]                       # (K_w h)_m = sum_n K_mn w_n h_n
        pi0 = np.eye(M) - np.outer(np.ones(M), w)
        self.matrix = eps * np.eye(M) - pi0 @ kw
        aug = np.zeros((M + 1, M + 1))
        aug[:M, :M] = self.matrix
        aug[:M, M] = w
        aug[M, :M] = w
        self._aug_lu = lu_factor(aug)
        self._kw = kw

    @property
    def grid(self) -> CircleGrid:
        return self.rho_bar.grid

    def as_grid_operator(self) -> GridOperator:
        return GridOperator(self.matrix, "L2(mu)", self.w)

    def _check_mean_zero(self, f: np.ndarray) -> None:
        defect = abs(float(self.w @ f))
        if defect > MEAN_INPUT_TOL:
            raise ValueError(f"input has mu-mean {defect:.2e}; project with Pi_0 first")

    def project(self, f: np.ndarray) -> np.ndarray:
        return f - float(self.w @ f)

    def apply(self, h: np.ndarray) -> np.ndarray:
        self._check_mean_zero(h)
        return self.matrix @ h

    __call__ = apply

    def solve_hinv(self, z: np.ndarray) -> np.ndarray:
        """Solve H z' = Pi_0 z with z' mean-zero under mu."""
        M = self.grid.M
        rhs = np.zeros(M + 1)
        rhs[:M] = self.project(z)
        sol = lu_solve(self._aug_lu, rhs)
        return sol[:M]

    def h_norm_sq(self, h: np.ndarray) -> float:
        return float(self.w @ (h * self.apply(h)))

    def hinv_norm_sq(self, z: np.ndarray) -> float:
        self._check_mean_zero(z)
        return float(self.w @ (self.solve_hinv(z) * z))

    def h_half_norm(self, h: np.ndarray) -> float:
        """||h||_H = sqrt(<h, H h>)."""
        return float(np.sqrt(max(self.h_norm_sq(h), 0.0)))

    def mean_zero_spectrum(self) -> np.ndarray:
        """All eigenvalues of H restricted to the mean-zero subspace, ascending.

        Computed from the symmetrized form D^{1/2} H D^{-1/2}; the constant
        direction is deflated by pinning it to the eigenvalue 2 eps.
        """
        u = np.sqrt(self.w)                       # unit vector spanning constants
        M = self.grid.M
        k_sym = np.sqrt(self.w)[:, None] * kernel_matrix(self.grid.points, self.grid.points, self.A) \
            * np.sqrt(self.w)[None, :]
        pi = np.eye(M) - np.outer(u, u)
        core = pi @ (self.eps * np.eye(M) - k_sym) @ pi
        shifted = core + 2.0 * self.eps * np.outer(u, u)
        evals = eigh(shifted, eigvals_only=True)
        top = evals[-1]
        if abs(top - 2.0 * self.eps) > 1e-10 * max(1.0, abs(self.eps)):
            raise RuntimeError("deflation failed: pinned constant eigenvalue moved")
        return evals[:-1]


def hessian_operator(rho_bar: CircleDensity, A: AttentionSpec, eps: float) -> HessianOperator:
    return HessianOperator(rho_bar, A, eps)


def weighted_laplacian(rho_bar: CircleDensity, grid: CircleGrid | None = None) -> GridOperator:
    """Conservative discretization of rho^{-1} d_theta(rho d_theta phi).

    Face densities are arithmetic means, which keeps the operator exactly
    self-adjoint in L^2(mu) and matches the Dirichlet form used for the
    Rayleigh numerator.
    """
    grid = grid or rho_bar.grid
    if np.any(rho_bar.values <= 0):
        raise ValueError("weighted Laplacian requires a strictly positive density")
    M = grid.M
    h = grid.h
    rho = rho_bar.values
    faces = 0.5 * (rho + np.roll(rho, -1))   # faces[m] sits between nodes m and m+1
    mat = np.zeros((M, M))
    idx = np.arange(M)
    mat[idx, (idx + 1) % M] += faces / (rho * h * h)
    mat[idx, (idx - 1) % M] += np.roll(faces, 1) / (rho * h * h)
    mat[idx, idx] -= (faces + np.roll(faces, 1)) / (rho * h * h)
    return GridOperator(mat, "L2(mu)", rho_bar.weights())


def dirichlet_form(rho_bar: CircleDensity, f: np.ndarray, g: np.ndarray | None = None) -> float:
    """Quadratic form of the weighted Laplacian: sum of face-weighted slope products.

    This is exactly -<Lap f, g>_{L^2(mu)} for the operator built above.
    """
    if g is None:
        g = f
    grid = rho_bar.grid
    rho = rho_bar.values
    faces = 0.5 * (rho + np.roll(rho, -1))
    df = np.roll(f, -1) - f
    dg = np.roll(g, -1) - g
    return float(np.sum(faces * df * dg) / (grid.M * grid.h * grid.h))


def rayleigh_rate(g: np.ndarray, rho_bar: CircleDensity, H: HessianOperator) -> float:
    """R(g) = ||grad g||^2_{L^2(mu)} / ||g||^2_{H^{-1}} for a mean-zero g.

    The numerator is the face-difference Dirichlet form, i.e. the exact
    quadratic form of the discrete weighted Laplacian, so the costate decay
    bound exp(-(T-t) R) is a theorem for the discretized dynamics as well.
    """
    g = np.asarray(g, dtype=float)
    if float(rho_bar.inner(g, g)) <= 1e-24:
        raise ZeroGradientError("terminal derivative is numerically zero; rate undefined")
    num = dirichlet_form(rho_bar, g)
    den = H.hinv_norm_sq(g)
    if den <= 0:
        raise ValueError("H^{-1} norm came out nonpositive; Hessian may be broken")
    return num / den
