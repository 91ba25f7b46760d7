"""Attention interaction: the kernel e^{<x, A y>}, its induced vector field,
the interaction energy, and the closed-form landscape constants.

The inverse temperature of the interaction is fixed to 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class AttentionSpec:
    """Symmetric positive-definite interaction matrix with a simple top eigenvalue.

    ``eigenvalues`` are sorted descending; ``eigenvectors`` holds the matching
    orthonormal columns. Construct through :meth:`from_matrix` (validating) or
    :meth:`unchecked` (for degenerate test matrices such as A=0).
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "AttentionSpec":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"attention matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
            raise ValueError("attention matrix must be symmetric within 1e-12")
        evals, evecs = np.linalg.eigh(m)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        if evals[-1] <= 0:
            raise ValueError(f"attention matrix must be positive definite, min eigenvalue {evals[-1]}")
        if m.shape[0] >= 2 and not evals[0] > evals[1]:
            raise ValueError("top eigenvalue must be simple (lambda_1 > lambda_2)")
        m.setflags(write=False)
        evals.setflags(write=False)
        evecs.setflags(write=False)
        return cls(m, evals, evecs)

    @classmethod
    def unchecked(cls, matrix) -> "AttentionSpec":
        """Skip the non-degeneracy checks; for test matrices only."""
        m = np.asarray(matrix, dtype=float)
        evals, evecs = np.linalg.eigh(m)
        order = np.argsort(evals)[::-1]
        m.setflags(write=False)
        return cls(m, evals[order], evecs[:, order])

    @classmethod
    def diagonal(cls, *entries: float) -> "AttentionSpec":
        return cls.from_matrix(np.diag(entries))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])


@dataclass(frozen=True)
class LandscapeConstants:
    """Closed-form constants of the clustered energy landscape.

    delta0:              energy level separating the two minimizers from all
                         other critical points (small-noise limit).
    q_a:                 kernel chord bound max{e^{lambda2}, cosh(lambda1)};
                         always below e^{lambda1}.
    hessian_lower_scale: (eps/2)(1 - lambda2/lambda1), the curvature floor.
    a_safe_scale:        (1 - lambda2/lambda1)^2 lambda1 e^{-lambda1}, the
                         localization-exponent scale.
    sigma_eps_sq:        eps / (lambda1 e^{lambda1}), the angular variance of
                         the clustered state.
    """

    delta0: float
    q_a: float
    hessian_lower_scale: float
    a_safe_scale: float
    sigma_eps_sq: float


def kernel(x: np.ndarray, y: np.ndarray, A: AttentionSpec) -> float:
    """Pairwise interaction strength exp(<x, A y>)."""
    return float(np.exp(np.dot(x, A.matrix @ y)))


def kernel_matrix(X: np.ndarray, Y: np.ndarray, A: AttentionSpec) -> np.ndarray:
    """exp(X A Y^T) for row-stacked point sets."""
    return np.exp(X @ (A.matrix @ Y.T))


def _as_points_and_weights(mu) -> tuple[np.ndarray, np.ndarray]:
    """Normalize either a particle ensemble or a circle density to (points, weights)."""
    points = getattr(mu, "points", None)
    if points is not None:
        pts = np.asarray(points, dtype=float)
        if pts.shape[0] == 0:
            raise ValueError("empty ensemble")
        w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        return pts, w
    values = getattr(mu, "values", None)
    grid = getattr(mu, "grid", None)
    if values is not None and grid is not None:
        w = np.asarray(values, dtype=float) / grid.M
        return grid.points, w
    raise TypeError(f"expected a particle ensemble or circle density, got {type(mu)!r}")


def chi_field(mu, A: AttentionSpec, x: np.ndarray) -> np.ndarray:
    """Attention drift field at x: integral of e^{<x, A y>} A y over mu.

    Particle ensembles use the empirical mean; circle densities use the
    uniform-grid quadrature. ``x`` may be a single point or an (n, d) batch.
    """
    pts, w = _as_points_and_weights(mu)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    AY = pts @ A.matrix  # row j holds A y_j
    K = np.exp(X @ AY.T)
    field = (K * w[None, :]) @ AY
    return field[0] if np.asarray(x).ndim == 1 else field


def interaction_energy(mu, A: AttentionSpec) -> float:
    """-1/2 double integral of the kernel against mu x mu (diagonal included)."""
    pts, w = _as_points_and_weights(mu)
    K = kernel_matrix(pts, pts, A)
    return -0.5 * float(w @ K @ w)


def landscape_constants(A: AttentionSpec, eps: float) -> LandscapeConstants:
    """Evaluate the five closed-form landscape constants for (A, eps)."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    l1, l2 = A.lambda1, A.lambda2
    ratio = 1.0 - l2 / l1
    return LandscapeConstants(
        delta0=0.5 * min(np.sinh(l1), np.exp(l1) - np.exp(l2)),
        q_a=max(np.exp(l2), np.cosh(l1)),
        hessian_lower_scale=0.5 * eps * ratio,
        a_safe_scale=ratio * ratio * l1 * np.exp(-l1),
        sigma_eps_sq=eps / (l1 * np.exp(l1)),
    )
