"""Uniform circle grid, densities relative to the uniform measure, and grid operators.

Conventions used across the mean-field stack:
  - integral against the uniform probability measure:  (1/M) sum_m f_m
  - integral against mu = rho d(omega):                (1/M) sum_m f_m rho_m
  - densities are relative to the uniform probability measure, mean 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

MEAN_TOL = 1e-12


@dataclass(frozen=True)
class CircleGrid:
    """M equispaced nodes theta_m = 2 pi m / M on the circle, M even and >= 64."""

    M: int

    def __post_init__(self):
        if self.M < 64 or self.M % 2 != 0:
            raise ValueError(f"grid size must be even and >= 64, got {self.M}")

    @cached_property
    def thetas(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    @cached_property
    def points(self) -> np.ndarray:
        """Node positions on S^1 as (M, 2) unit rows."""
        return np.column_stack([np.cos(self.thetas), np.sin(self.thetas)])

    @cached_property
    def tangents(self) -> np.ndarray:
        """Unit tangents tau(theta) = (-sin, cos) at the nodes."""
        return np.column_stack([-np.sin(self.thetas), np.cos(self.thetas)])

    @cached_property
    def face_thetas(self) -> np.ndarray:
        """Midpoints theta_m + h/2 between node m and node m+1 (periodic)."""
        return self.thetas + np.pi / self.M

    @cached_property
    def face_points(self) -> np.ndarray:
        return np.column_stack([np.cos(self.face_thetas), np.sin(self.face_thetas)])

    @cached_property
    def face_tangents(self) -> np.ndarray:
        return np.column_stack([-np.sin(self.face_thetas), np.cos(self.face_thetas)])

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.M

    def mean(self, f: np.ndarray) -> float:
        """Integral against the uniform probability measure."""
        return float(np.mean(f))


@dataclass
class CircleDensity:
    """Grid density relative to the uniform probability measure (mean exactly 1)."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.M,):
            raise ValueError(f"density shape {self.values.shape} does not match grid M={self.grid.M}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("density values must be finite")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")
        if abs(np.mean(self.values) - 1.0) > MEAN_TOL:
            raise ValueError(f"density mean {np.mean(self.values)!r} deviates from 1 beyond {MEAN_TOL}")

    @classmethod
    def from_unnormalized(cls, grid: CircleGrid, raw: np.ndarray) -> "CircleDensity":
        raw = np.asarray(raw, dtype=float)
        total = np.mean(raw)
        if not np.isfinite(total) or total <= 0:
            raise ValueError("cannot normalize: nonpositive or non-finite total mass")
        return cls(grid, raw / total)

    @classmethod
    def uniform(cls, grid: CircleGrid) -> "CircleDensity":
        return cls(grid, np.ones(grid.M))

    @classmethod
    def vmf(cls, grid: CircleGrid, kappa: float, mode_angle: float = 0.0) -> "CircleDensity":
        """von Mises density on the grid; stable for arbitrarily large kappa."""
        if kappa < 0:
            raise ValueError(f"concentration must be >= 0, got {kappa}")
        raw = np.exp(kappa * (np.cos(grid.thetas - mode_angle) - 1.0))
        return cls.from_unnormalized(grid, raw)

    def reflected(self) -> "CircleDensity":
        """Antipodal image: rho(theta + pi), exact on an even grid."""
        return CircleDensity(self.grid, np.roll(self.values, self.grid.M // 2))

    def mirrored(self) -> "CircleDensity":
        """Mirror image: rho(-theta), exact on the node set."""
        return CircleDensity(self.grid, np.roll(self.values[::-1], 1))

    def weights(self) -> np.ndarray:
        """Quadrature weights of the measure rho d(omega): rho_m / M."""
        return self.values / self.grid.M

    def mean_under(self, f: np.ndarray) -> float:
        """Integral of f against this density's measure."""
        return float(self.weights() @ f)

    def project_mean_zero(self, f: np.ndarray) -> np.ndarray:
        """Remove the mean of f under this density (projection Pi_0)."""
        return f - self.mean_under(f)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """L^2(rho d omega) inner product."""
        return float(self.weights() @ (f * g))


@dataclass
class GridOperator:
    """Dense M x M operator together with the inner product it is symmetric under."""

    matrix: np.ndarray
    inner_product: str          # "L2(mu)" or "Hinv"
    weights: np.ndarray         # quadrature weights of the declared inner product

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("operator entries must be finite")

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f

    __call__ = apply

    def symmetry_defect(self) -> float:
        """Max asymmetry of the weighted matrix diag(w) @ matrix."""
        weighted = self.weights[:, None] * self.matrix
        return float(np.max(np.abs(weighted - weighted.T)))

    def save(self, path_base: str | Path) -> tuple[Path, Path]:
        """Headerless little-endian float64 dump plus a JSON sidecar."""
        base = Path(path_base)
        bin_path = base.with_suffix(".bin")
        json_path = base.with_suffix(".json")
        self.matrix.astype("<f8").tofile(bin_path)
        json_path.write_text(json.dumps({
            "M": int(self.matrix.shape[0]),
            "inner_product": self.inner_product,
        }, indent=2), encoding="utf-8")
        return bin_path, json_path

    @classmethod
    def load(cls, path_base: str | Path, weights: np.ndarray) -> "GridOperator":
        base = Path(path_base)
        meta = json.loads(base.with_suffix(".json").read_text(encoding="utf-8"))
        M = int(meta["M"])
        matrix = np.fromfile(base.with_suffix(".bin"), dtype="<f8").reshape(M, M)
        return cls(matrix, meta["inner_product"], np.asarray(weights, dtype=float))
