"""Backward costate flow, control-signal operators, and the linearized response.

The costate solves the terminal-value problem  d phi/dt + H Lap phi = 0,
phi_T = g, integrated by implicit Euler in reversed time. Implicit Euler is
contractive in the H^{-1} norm, and the Jensen decay bound against the
Rayleigh rate holds exactly for the discrete semigroup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..controls import ControlPath, FeatureMap
from ..errors import ZeroGradientError
from .grid import CircleDensity, GridOperator
from .operators import HessianOperator, weighted_laplacian

MEAN_ZERO_TOL = 1e-10


@dataclass
class GridFunctionPath:
    """A time-indexed family of grid functions on a uniform time grid."""

    times: np.ndarray    # (J+1,), ascending, uniform
    values: np.ndarray   # (J+1, M)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    def index_of(self, t: float) -> int:
        j = int(round((t - self.times[0]) / self.spacing))
        if j < 0 or j >= len(self.times) or abs(self.times[j] - t) > 1e-9:
            raise ValueError(f"time {t} is not on the path grid")
        return j

    def value_at(self, t: float) -> np.ndarray:
        """Grid function at time t; linear interpolation between grid times."""
        s = (t - self.times[0]) / self.spacing
        j = int(np.floor(s + 1e-12))
        j = min(max(j, 0), len(self.times) - 2)
        frac = s - j
        if frac <= 1e-12:
            return self.values[j]
        if frac >= 1 - 1e-12:
            return self.values[j + 1]
        return (1 - frac) * self.values[j] + frac * self.values[j + 1]


@dataclass
class CostatePath(GridFunctionPath):
    """Backward costate phi_t with its terminal datum g."""

    g: np.ndarray

    def __post_init__(self):
        if not np.allclose(self.values[-1], self.g, atol=1e-12, rtol=0.0):
            raise ValueError("terminal costate slice must equal the terminal datum")


def backward_costate(g: np.ndarray, rho_bar: CircleDensity, H: HessianOperator,
                     T: float, t_grid: np.ndarray | None = None, max_step: float = 0.01,
                     lap: GridOperator | None = None) -> CostatePath:
    """Integrate the backward weighted diffusion from phi_T = g down to t = 0.

    ``t_grid`` must be uniform and end at T; when omitted, a uniform grid with
    spacing <= max_step is used. Internal substeps refine the grid spacing to
    max_step, with one LU factorization reused across all steps.
    """
    g = np.asarray(g, dtype=float)
    if abs(float(H.w @ g)) > MEAN_ZERO_TOL * max(1.0, float(np.max(np.abs(g)))):
        raise ValueError("terminal datum must be mean-zero under the stationary measure")
    if t_grid is None:
        J = max(int(np.ceil(T / max_step - 1e-12)), 1)
        t_grid = np.linspace(0.0, T, J + 1)
    t_grid = np.asarray(t_grid, dtype=float)
    spacings = np.diff(t_grid)
    if len(spacings) < 1 or np.max(np.abs(spacings - spacings[0])) > 1e-9:
        raise ValueError("costate time grid must be uniform")
    if abs(t_grid[-1] - T) > 1e-9:
        raise ValueError(f"costate grid must end at T={T}")
    spacing = float(spacings[0])
    nsub = max(int(np.ceil(spacing / max_step - 1e-12)), 1)
    ds = spacing / nsub

    lap = lap or weighted_laplacian(rho_bar)
    l_pos = -(H.matrix @ lap.matrix)              # positive generator -H Lap
    step_lu = lu_factor(np.eye(rho_bar.grid.M) + ds * l_pos)

    values = np.empty((len(t_grid), rho_bar.grid.M))
    values[-1] = g
    phi = g.copy()
    for j in range(len(t_grid) - 2, -1, -1):
        for _ in range(nsub):
            phi = lu_solve(step_lu, phi)
        phi = phi - float(H.w @ phi)              # re-pin the mu-mean against roundoff
        values[j] = phi
    return CostatePath(t_grid, values, g=g)


def gradient_signal(z: np.ndarray, rho_bar: CircleDensity, sigma: FeatureMap) -> np.ndarray:
    """The control-gradient matrix B* z = integral of grad z sigma^T d mu, shape (d, p).

    grad z is the tangential gradient z'(theta) tau(theta), with z' by centered
    differences at the nodes.
    """
    grid = rho_bar.grid
    dz = (np.roll(z, -1) - np.roll(z, 1)) / (2.0 * grid.h)
    coeff = rho_bar.weights() * dz
    return (grid.tangents * coeff[:, None]).T @ sigma(grid.points)


def control_forcing(W: np.ndarray, rho_bar: CircleDensity, sigma: FeatureMap) -> np.ndarray:
    """The density forcing B W = -rho^{-1} d_theta(rho <W sigma, tau>) on the nodes.

    Conservative face form, so the output has exactly zero mean under mu.
    """
    grid = rho_bar.grid
    rho = rho_bar.values
    faces = 0.5 * (rho + np.roll(rho, -1))
    u_face = sigma(grid.face_points) @ np.asarray(W, dtype=float).T
    flux = faces * np.einsum("mj,mj->m", u_face, grid.face_tangents)
    return -(flux - np.roll(flux, 1)) / (rho * grid.h)


def visibility_factor(costate: CostatePath, sigma: FeatureMap, rho_bar: CircleDensity,
                      H: HessianOperator, t: float) -> float:
    """Accumulated squared gradient signal on [0, t], normalized by ||phi_t||^2_{H^{-1}}."""
    j = costate.index_of(t)
    den = H.hinv_norm_sq(costate.values[j])
    if den < 1e-14:
        raise ZeroGradientError(f"costate H^{{-1}} norm at t={t} is below 1e-14")
    if j == 0:
        return 0.0
    sig_sq = np.array([
        float(np.sum(gradient_signal(costate.values[i], rho_bar, sigma) ** 2))
        for i in range(j + 1)
    ])
    return float(np.trapezoid(sig_sq, costate.times[:j + 1])) / den


def one_gd_path(g: np.ndarray, costate: CostatePath, sigma: FeatureMap, rho_bar: CircleDensity,
                alpha: float, bin_width: float) -> ControlPath:
    """Control path after one gradient step from zero: bin k holds -alpha B* phi
    evaluated at the bin midpoint."""
    if alpha <= 0:
        raise ValueError(f"learning rate must be > 0, got {alpha}")
    T = costate.horizon
    K = int(round(T / bin_width))
    if abs(K * bin_width - T) > 1e-9:
        raise ValueError(f"bin width {bin_width} does not divide the horizon {T}")
    bins = np.empty((K, sigma.d, sigma.p))
    for k in range(K):
        phi_mid = costate.value_at((k + 0.5) * bin_width)
        bins[k] = -alpha * gradient_signal(phi_mid, rho_bar, sigma)
    return ControlPath(bins, bin_width, sigma)


def linear_response(costate: CostatePath, sigma: FeatureMap, rho_bar: CircleDensity,
                    H: HessianOperator, lap: GridOperator | None = None) -> GridFunctionPath:
    """First-order density response zeta to the unit-rate one-step control.

    Solves d zeta/dt = Lap H zeta - B B* phi_t with zeta_0 = 0, implicit in the
    generator and explicit in the forcing; zeta_t stays mean-zero under mu.
    """
    lap = lap or weighted_laplacian(rho_bar)
    gen = lap.matrix @ H.matrix                   # forward generator Lap H
    ds = costate.spacing
    step_lu = lu_factor(np.eye(rho_bar.grid.M) - ds * gen)
    values = np.zeros_like(costate.values)
    zeta = np.zeros(rho_bar.grid.M)
    for j in range(len(costate.times) - 1):
        forcing = control_forcing(gradient_signal(costate.values[j], rho_bar, sigma), rho_bar, sigma)
        zeta = lu_solve(step_lu, zeta - ds * forcing)
        zeta = zeta - float(H.w @ zeta)
        values[j + 1] = zeta
    return GridFunctionPath(costate.times.copy(), values)
