"""turnpike_lab: noisy mean-field token dynamics on the sphere.

Particle-level SDE simulation with trainable layerwise FFN controls, a
circle-grid solver for the stationary clustered state and its linearized
operators, and an experiment harness for the clustering / turnpike / escape
phase structure.
"""

__version__ = "0.1.0"

from .attention import AttentionSpec, LandscapeConstants, chi_field, interaction_energy, kernel, landscape_constants
from .controls import ControlPath, FeatureMap
from .losses import AlignLoss, BowLoss, functional_derivative_on_grid, sample_bow_candidates
from .particles import SimConfig, Trajectory, UnitVectorEnsemble, drift, em_step, particle_energy, simulate
from .sphere import RngStream, project_tangent, retract, sample_cap_init, sample_vmf, signed_angle
from .training import AdamState, TrainConfig, TrainResult, backprop_gradient, objective, train

__all__ = [
    "AdamState",
    "AlignLoss",
    "AttentionSpec",
    "BowLoss",
    "ControlPath",
    "FeatureMap",
    "LandscapeConstants",
    "RngStream",
    "SimConfig",
    "TrainConfig",
    "TrainResult",
    "Trajectory",
    "UnitVectorEnsemble",
    "backprop_gradient",
    "chi_field",
    "drift",
    "em_step",
    "functional_derivative_on_grid",
    "interaction_energy",
    "kernel",
    "landscape_constants",
    "objective",
    "particle_energy",
    "project_tangent",
    "retract",
    "sample_bow_candidates",
    "sample_cap_init",
    "sample_vmf",
    "signed_angle",
    "simulate",
    "train",
]
