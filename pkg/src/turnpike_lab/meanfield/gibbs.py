"""Stationary clustered density on the circle and the free energy around it."""

from __future__ import annotations

import numpy as np

from ..attention import AttentionSpec, kernel_matrix
from ..errors import GibbsConvergenceError
from .grid import CircleDensity, CircleGrid


def interaction_potential(rho: CircleDensity, A: AttentionSpec, K: np.ndarray | None = None) -> np.ndarray:
    """W_rho(theta_m) = integral of e^{<x_m, A y>} against rho, on the nodes."""
    if K is None:
        K = kernel_matrix(rho.grid.points, rho.grid.points, A)
    return K @ rho.weights()


def _fixed_point_map(rho_values: np.ndarray, K: np.ndarray, eps: float, M: int) -> np.ndarray:
    w = K @ (rho_values / M)
    v = np.exp((w - np.max(w)) / eps)  # max-shift: exponent <= 0, no overflow
    total = np.mean(v)
    if not np.isfinite(total) or total <= 0:
        raise FloatingPointError("Gibbs map produced a non-normalizable iterate")
    return v / total


def stationary_gibbs(A: AttentionSpec, eps: float, grid: CircleGrid, branch: str = "positive",
                     tol: float = 1e-11, max_iter: int = 50_000, damping: float = 0.5) -> CircleDensity:
    """Solve rho = normalize(exp(W_rho / eps)) by damped fixed-point iteration.

    Starts from a von Mises bump at the branch pole (concentration 4/eps capped
    at 1e4) and damps with factor ``damping``; the negative branch is the
    antipodal reflection of the positive one.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if branch not in ("positive", "negative"):
        raise ValueError(f"branch must be 'positive' or 'negative', got {branch!r}")
    K = kernel_matrix(grid.points, grid.points, A)
    rho = CircleDensity.vmf(grid, kappa=min(4.0 / eps, 1e4)).values
    residual = np.inf
    for _ in range(max_iter):
        target = _fixed_point_map(rho, K, eps, grid.M)
        residual = float(np.max(np.abs(rho - target)))
        if residual < tol:
            rho = target
            break
        rho = (1.0 - damping) * rho + damping * target
    else:
        raise GibbsConvergenceError(residual, max_iter)
    density = CircleDensity.from_unnormalized(grid, rho)
    return density.reflected() if branch == "negative" else density


def gibbs_residual(rho: CircleDensity, A: AttentionSpec, eps: float) -> float:
    """Sup-norm fixed-point defect of a candidate stationary density."""
    K = kernel_matrix(rho.grid.points, rho.grid.points, A)
    return float(np.max(np.abs(rho.values - _fixed_point_map(rho.values, K, eps, rho.grid.M))))


def grid_energy(rho: CircleDensity, A: AttentionSpec, eps: float, K: np.ndarray | None = None) -> float:
    """Entropy-regularized interaction energy of a grid density.

    E = eps * (1/M) sum rho log rho - 1/2 (1/M^2) rho^T K rho, with 0 log 0 = 0.
    """
    vals = rho.values
    if K is None:
        K = kernel_matrix(rho.grid.points, rho.grid.points, A)
    entropy = float(np.mean(np.where(vals > 0, vals * np.log(np.where(vals > 0, vals, 1.0)), 0.0)))
    w = rho.weights()
    return eps * entropy - 0.5 * float(w @ K @ w)


GAP_FLOOR = 1e-13


def energy_and_gap(rho: CircleDensity, rho_bar: CircleDensity, A: AttentionSpec, eps: float,
                   K: np.ndarray | None = None) -> tuple[float, float]:
    """Energy of rho and its gap above the stationary density's energy.

    Gaps smaller than 1e-13 in magnitude are reported as exactly 0 so that
    log-linear rate fits do not chase roundoff.
    """
    if rho.grid.M != rho_bar.grid.M:
        raise ValueError("densities live on different grids")
    e = grid_energy(rho, A, eps, K=K)
    gap = e - grid_energy(rho_bar, A, eps, K=K)
    if abs(gap) < GAP_FLOOR:
        gap = 0.0
    return e, gap
