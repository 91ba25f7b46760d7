"""Terminal losses: align-target and Bag-of-Words, with particle gradients and
linear functional derivatives on the circle grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSoftmaxError
from .meanfield.grid import CircleDensity
from .particles import UnitVectorEnsemble
from .sphere import RngStream, sample_vmf, unit_vector


@dataclass(frozen=True)
class AlignLoss:
    """1 - <first moment, target>: rewards the ensemble mean pointing at the target."""

    target: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", unit_vector(self.target))

    def value(self, ensemble: UnitVectorEnsemble) -> float:
        return 1.0 - float(np.mean(ensemble.points, axis=0) @ self.target)

    def grad(self, ensemble: UnitVectorEnsemble) -> np.ndarray:
        """Gradient w.r.t. raw particle coordinates: every row is -target/N."""
        n = ensemble.n
        return np.tile(-self.target / n, (n, 1))

    def value_on_grid(self, rho: CircleDensity) -> float:
        return 1.0 - float(rho.weights() @ (rho.grid.points @ self.target))

    def derivative_on_grid(self, rho: CircleDensity) -> np.ndarray:
        """Linear functional derivative at rho, mean-zero under rho."""
        return rho.project_mean_zero(-(rho.grid.points @ self.target))


@dataclass
class BowLoss:
    """Bag-of-Words loss with logits R(x)_w = <x, c_w> and target distribution q."""

    candidates: np.ndarray  # (V, d) unit rows
    q: np.ndarray           # (V,) probabilities

    def __post_init__(self):
        self.candidates = np.atleast_2d(np.asarray(self.candidates, dtype=float))
        if self.candidates.shape[0] < 1:
            raise ValueError("need at least one candidate")
        self.q = np.asarray(self.q, dtype=float)
        if self.q.shape != (self.candidates.shape[0],):
            raise ValueError(f"target shape {self.q.shape} does not match {self.candidates.shape[0]} candidates")
        if np.any(self.q < 0) or abs(np.sum(self.q) - 1.0) > 1e-12:
            raise ValueError("target must be a probability vector (sum 1 within 1e-12)")

    @classmethod
    def uniform_target(cls, candidates: np.ndarray) -> "BowLoss":
        candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        V = candidates.shape[0]
        return cls(candidates, np.full(V, 1.0 / V))

    def _softmax_rows(self, points: np.ndarray) -> np.ndarray:
        logits = points @ self.candidates.T
        logits -= np.max(logits, axis=1, keepdims=True)
        e = np.exp(logits)
        return e / np.sum(e, axis=1, keepdims=True)

    def _averaged_mass(self, s: np.ndarray, weights: np.ndarray) -> np.ndarray:
        m = weights @ s
        if np.any((m <= 0.0) & (self.q > 0.0)):
            raise DegenerateSoftmaxError("averaged softmax mass underflowed on a supported word")
        return m

    def value(self, ensemble: UnitVectorEnsemble) -> float:
        s = self._softmax_rows(ensemble.points)
        m = self._averaged_mass(s, np.full(ensemble.n, 1.0 / ensemble.n))
        return -float(self.q @ np.log(np.where(self.q > 0, m, 1.0)))

    def grad(self, ensemble: UnitVectorEnsemble) -> np.ndarray:
        """Exact gradient of softmax-then-average-then-log w.r.t. raw coordinates."""
        n = ensemble.n
        s = self._softmax_rows(ensemble.points)                      # (N, V)
        m = self._averaged_mass(s, np.full(n, 1.0 / n))              # (V,)
        ratio = np.where(self.q > 0, self.q / m, 0.0)                # q_w / m_w
        r_s = s * ratio[None, :]                                     # (N, V)
        mean_cand = s @ self.candidates                              # rows sum_v s_iv c_v
        grad = r_s @ self.candidates - np.sum(r_s, axis=1, keepdims=True) * mean_cand
        return -grad / n

    def value_on_grid(self, rho: CircleDensity) -> float:
        s = self._softmax_rows(rho.grid.points)
        m = self._averaged_mass(s, rho.weights())
        return -float(self.q @ np.log(np.where(self.q > 0, m, 1.0)))

    def derivative_on_grid(self, rho: CircleDensity) -> np.ndarray:
        s = self._softmax_rows(rho.grid.points)
        m = self._averaged_mass(s, rho.weights())
        ratio = np.where(self.q > 0, self.q / m, 0.0)
        return rho.project_mean_zero(-(s @ ratio))


def functional_derivative_on_grid(loss: AlignLoss | BowLoss, rho: CircleDensity) -> np.ndarray:
    """Mean-zero (under rho) linear functional derivative of the loss at rho."""
    return loss.derivative_on_grid(rho)


def sample_bow_candidates(kappa_cand: float, vocab: int = 16,
                          rng: RngStream | None = None,
                          mean: np.ndarray | None = None) -> np.ndarray:
    """Candidate vectors for the BoW loss: vMF draws around e_2 by default.

    The mean direction points away from the initial cap at e_1 so the readout
    can pull the terminal distribution off the clustered state.
    """
    rng = rng or RngStream(0, 1)
    mean = np.array([0.0, 1.0]) if mean is None else unit_vector(mean)
    return sample_vmf(mean, kappa_cand, vocab, rng)
