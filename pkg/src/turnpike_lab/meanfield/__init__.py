"""Circle-grid mean-field analysis: stationary state, linearized operators,
costate flow, and density evolution."""

from .costate import (
    CostatePath,
    GridFunctionPath,
    backward_costate,
    control_forcing,
    gradient_signal,
    linear_response,
    one_gd_path,
    visibility_factor,
)
from .fokker_planck import DensityPath, evolve_density, gap_series
from .gibbs import energy_and_gap, gibbs_residual, grid_energy, interaction_potential, stationary_gibbs
from .grid import CircleDensity, CircleGrid, GridOperator
from .operators import HessianOperator, dirichlet_form, hessian_operator, rayleigh_rate, weighted_laplacian

__all__ = [
    "CircleDensity",
    "CircleGrid",
    "CostatePath",
    "DensityPath",
    "GridFunctionPath",
    "GridOperator",
    "HessianOperator",
    "backward_costate",
    "control_forcing",
    "dirichlet_form",
    "energy_and_gap",
    "evolve_density",
    "gap_series",
    "gibbs_residual",
    "gradient_signal",
    "grid_energy",
    "hessian_operator",
    "interaction_potential",
    "linear_response",
    "one_gd_path",
    "rayleigh_rate",
    "stationary_gibbs",
    "visibility_factor",
    "weighted_laplacian",
]
