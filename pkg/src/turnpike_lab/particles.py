"""Noisy interacting-particle dynamics on the sphere.

Projected Euler-Maruyama with normalization retraction: each step moves
particles by the tangent-projected drift (FFN control + attention coupling)
plus tangent-projected Gaussian noise, then renormalizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

from .attention import AttentionSpec, interaction_energy
from .controls import ControlPath, FeatureMap
from .sphere import RngStream

NORM_TOL = 1e-10


@dataclass
class UnitVectorEnsemble:
    """N particles on S^{d-1} at one layer time."""

    points: np.ndarray  # (N, d), unit rows
    time: float = 0.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError(f"points must be a nonempty (N, d) array, got shape {self.points.shape}")
        norms = np.linalg.norm(self.points, axis=1)
        if np.max(np.abs(norms - 1.0)) > NORM_TOL:
            raise ValueError("ensemble rows must have unit norm within 1e-10")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SimConfig:
    """Integrator configuration for one simulation run."""

    horizon: float
    dt: float
    eps: float
    seed: RngStream
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"horizon/dt = {steps} is not an integer step count")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class Trajectory:
    """Recorded states and energies of one simulation."""

    times: np.ndarray       # (R,)
    states: np.ndarray      # (R, N, d)
    interaction: np.ndarray  # (R,)
    entropy: np.ndarray      # (R,)

    @property
    def total_energy(self) -> np.ndarray:
        return self.interaction + self.entropy

    def terminal(self) -> UnitVectorEnsemble:
        return UnitVectorEnsemble(self.states[-1].copy(), float(self.times[-1]))


def drift(ensemble: UnitVectorEnsemble, A: AttentionSpec, W: np.ndarray, sigma: FeatureMap) -> np.ndarray:
    """Tangent-projected velocity field: rows P_x(W sigma(x) + attention mean)."""
    X = ensemble.points
    W = np.asarray(W, dtype=float)
    if W.shape != (sigma.d, sigma.p):
        raise ValueError(f"control matrix shape {W.shape} does not match features ({sigma.d}, {sigma.p})")
    if X.shape[1] != sigma.d:
        raise ValueError(f"ensemble dimension {X.shape[1]} does not match features d={sigma.d}")
    return _drift_core(X, A, W, sigma)


def _drift_core(X: np.ndarray, A: AttentionSpec, W: np.ndarray, sigma: FeatureMap) -> np.ndarray:
    AY = X @ A.matrix                      # rows A x_j (A symmetric)
    K = np.exp(X @ AY.T)                   # K_ij = exp(<x_i, A x_j>)
    f = sigma(X) @ W.T + (K @ AY) / X.shape[0]
    return f - np.einsum("ij,ij->i", X, f)[:, None] * X


def _step_core(X: np.ndarray, A: AttentionSpec, W: np.ndarray, sigma: FeatureMap,
               dt: float, eps: float, xi: np.ndarray | None) -> np.ndarray:
    """One projected Euler-Maruyama step acting on the raw (N, d) state."""
    step = dt * _drift_core(X, A, W, sigma)
    if xi is not None and eps > 0:
        noise = xi - np.einsum("ij,ij->i", X, xi)[:, None] * X
        step = step + np.sqrt(2.0 * eps * dt) * noise
    Y = X + step
    norms = np.linalg.norm(Y, axis=1)
    if not np.all(np.isfinite(norms)) or np.any(norms < 1e-300):
        raise FloatingPointError("non-finite or collapsed particle state during step")
    return Y / norms[:, None]


def em_step(ensemble: UnitVectorEnsemble, A: AttentionSpec, W: np.ndarray, sigma: FeatureMap,
            dt: float, eps: float, rng: RngStream | np.random.Generator | None) -> UnitVectorEnsemble:
    """Advance the ensemble by one step of width dt.

    Bit-identical output for identical inputs and rng state.
    """
    xi = None
    if eps > 0:
        if rng is None:
            raise ValueError("eps > 0 requires an rng")
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        xi = gen.standard_normal(ensemble.points.shape)
    try:
        Y = _step_core(ensemble.points, A, W, sigma, dt, eps, xi)
    except FloatingPointError as exc:
        raise FloatingPointError(f"{exc} (t = {ensemble.time})") from exc
    return UnitVectorEnsemble(Y, ensemble.time + dt)


def draw_noise_tensor(cfg: SimConfig, n: int, d: int) -> np.ndarray | None:
    """All Brownian increments of a run as one (steps, N, d) tensor.

    Drawn in step-major order from the config seed, so a streaming loop that
    consumes the same generator sequentially sees identical values.
    """
    if cfg.eps == 0:
        return None
    gen = cfg.seed.generator()
    return gen.standard_normal((cfg.steps, n, d))


def simulate(init: UnitVectorEnsemble, controls: ControlPath, A: AttentionSpec,
             sigma: FeatureMap, cfg: SimConfig, record_energy: bool = True) -> Trajectory:
    """Integrate the controlled particle SDE and record states and energies.

    Records every ``record_stride`` steps plus the initial and final states.
    Deterministic for a fixed config seed.
    """
    if abs(cfg.horizon - controls.horizon) > 1e-9:
        raise ValueError(f"config horizon {cfg.horizon} != control horizon {controls.horizon}")
    if cfg.dt > controls.bin_width + 1e-12:
        raise ValueError(f"dt {cfg.dt} exceeds control bin width {controls.bin_width}")
    X = init.points.copy()
    steps = cfg.steps
    xi_all = draw_noise_tensor(cfg, init.n, init.d)

    rec_times, rec_states = [float(init.time)], [X.copy()]
    for k in range(steps):
        t = k * cfg.dt
        W = controls.value_at(t)
        try:
            X = _step_core(X, A, W, sigma, cfg.dt, cfg.eps, None if xi_all is None else xi_all[k])
        except FloatingPointError as exc:
            raise FloatingPointError(f"{exc} (step {k})") from exc
        if (k + 1) % cfg.record_stride == 0 or k + 1 == steps:
            rec_times.append(init.time + (k + 1) * cfg.dt)
            rec_states.append(X.copy())

    states = np.asarray(rec_states)
    inter = np.zeros(len(rec_times))
    if record_energy:
        for i, S in enumerate(states):
            inter[i] = interaction_energy(_PointsView(S), A)
    return Trajectory(np.asarray(rec_times), states, inter, np.zeros(len(rec_times)))


class _PointsView:
    """Light adapter so raw arrays can feed the attention integrals."""

    def __init__(self, points: np.ndarray):
        self.points = points


def particle_energy(ensemble: UnitVectorEnsemble, A: AttentionSpec, eps: float,
                    entropy_mode: str = "off", kde_kappa: float | None = None) -> float:
    """Energy estimate at the empirical measure.

    ``entropy_mode='kde'`` adds eps * mean log of a von Mises kernel density
    estimate (relative to the uniform probability measure); d=2 only.
    """
    e_int = interaction_energy(ensemble, A)
    if entropy_mode == "off":
        return e_int
    if entropy_mode != "kde":
        raise ValueError(f"unknown entropy mode {entropy_mode!r}")
    return e_int + eps * kde_entropy(ensemble, kde_kappa)


def kde_entropy(ensemble: UnitVectorEnsemble, kappa: float | None = None) -> float:
    """Mean log-density under a von Mises KDE, relative to the uniform measure."""
    if ensemble.d != 2:
        raise ValueError("kde entropy estimate requires d=2")
    theta = np.arctan2(ensemble.points[:, 1], ensemble.points[:, 0])
    if kappa is None:
        # default bandwidth from the mean resultant length R: kappa = 1/(2 (1 - R))
        R = float(np.linalg.norm(np.mean(ensemble.points, axis=0)))
        kappa = 1.0 / (2.0 * max(1.0 - R, 1e-6))
    dtheta = theta[:, None] - theta[None, :]
    # exp(kappa cos)/I0(kappa), written with i0e for large-kappa stability
    log_rho = np.log(np.mean(np.exp(kappa * (np.cos(dtheta) - 1.0)), axis=1)) - np.log(i0e(kappa))
    return float(np.mean(log_rho))
