"""Training of the layerwise control path by Adam on the simulated objective.

Gradients come from a hand-written reverse sweep through the projected
Euler-Maruyama integrator: exact vector-Jacobian products of the
normalization retraction, the tangent noise injection, and the drift
(including the all-pairs attention coupling), composed backward in time.
Forward states are checkpointed once per control bin and recomputed inside
the bin during the sweep, which reproduces them bit-exactly because the
Brownian increments are a fixed tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import AttentionSpec
from .controls import ControlPath, FeatureMap
from .particles import SimConfig, Trajectory, UnitVectorEnsemble, _step_core, draw_noise_tensor, simulate
from .sphere import RngStream


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    learning_rate: float
    lambda_reg: float = 0.0
    resample_noise: bool = True
    grad_clip: float | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"need at least one training step, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.lambda_reg < 0:
            raise ValueError(f"regularization weight must be >= 0, got {self.lambda_reg}")


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    @classmethod
    def zeros_like(cls, bins: np.ndarray, **kwargs) -> "AdamState":
        return cls(np.zeros_like(bins), np.zeros_like(bins), **kwargs)

    def update(self, params: np.ndarray, grad: np.ndarray, learning_rate: float) -> np.ndarray:
        self.step_count += 1
        self.first_moment = self.beta1 * self.first_moment + (1 - self.beta1) * grad
        self.second_moment = self.beta2 * self.second_moment + (1 - self.beta2) * grad * grad
        m_hat = self.first_moment / (1 - self.beta1 ** self.step_count)
        v_hat = self.second_moment / (1 - self.beta2 ** self.step_count)
        return params - learning_rate * m_hat / (np.sqrt(v_hat) + self.eps_adam)


def _steps_per_bin(controls: ControlPath, cfg: SimConfig) -> int:
    spb = controls.bin_width / cfg.dt
    if abs(spb - round(spb)) > 1e-9:
        raise ValueError(f"bin width {controls.bin_width} must be an integer multiple of dt {cfg.dt}")
    return int(round(spb))


def objective(controls: ControlPath, loss, init: UnitVectorEnsemble, A: AttentionSpec,
              sigma: FeatureMap, cfg: SimConfig, lambda_reg: float,
              noise: np.ndarray | None = None) -> float:
    """J(W) = loss(terminal ensemble) + (lambda_reg/2) ||W||^2_{L^2}."""
    if noise is None:
        traj = simulate(init, controls, A, sigma, cfg, record_energy=False)
        terminal = traj.terminal()
    else:
        X = init.points.copy()
        for k in range(cfg.steps):
            W = controls.value_at(k * cfg.dt)
            X = _step_core(X, A, W, sigma, cfg.dt, cfg.eps, noise[k] if cfg.eps > 0 else None)
        terminal = UnitVectorEnsemble(X, init.time + cfg.horizon)
    return loss.value(terminal) + 0.5 * lambda_reg * controls.l2_norm_sq()


def _step_vjp(X: np.ndarray, A: AttentionSpec, W: np.ndarray, sigma: FeatureMap,
              dt: float, eps: float, xi: np.ndarray | None,
              adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pull the adjoint back through one integrator step.

    X is the pre-step state, adj the gradient w.r.t. the post-step state.
    Returns (gradient w.r.t. X, gradient w.r.t. W).
    """
    N = X.shape[0]
    XA = X @ A.matrix                                     # rows A x_j
    K = np.exp(X @ XA.T)
    feats = sigma(X)
    f = feats @ W.T + (K @ XA) / N
    xdotf = np.einsum("ij,ij->i", X, f)
    step = dt * (f - xdotf[:, None] * X)
    s = 0.0
    if xi is not None and eps > 0:
        s = np.sqrt(2.0 * eps * dt)
        xdotxi = np.einsum("ij,ij->i", X, xi)
        step = step + s * (xi - xdotxi[:, None] * X)
    Y = X + step
    r = np.linalg.norm(Y, axis=1)
    Yhat = Y / r[:, None]

    # normalization: d(y/|y|) = (I - yhat yhat^T)/r
    mu = (adj - np.einsum("ij,ij->i", Yhat, adj)[:, None] * Yhat) / r[:, None]

    grad_x = mu.copy()
    xdotmu = np.einsum("ij,ij->i", X, mu)
    if xi is not None and eps > 0:
        grad_x -= s * (xdotxi[:, None] * mu + xdotmu[:, None] * xi)

    # drift VJP: m = tangent projection of mu at X
    m = mu - xdotmu[:, None] * X
    grad_w = dt * (m.T @ feats)
    grad_x += dt * sigma.jac_t_vec(X, m @ W)
    grad_x -= dt * (xdotf[:, None] * mu + xdotmu[:, None] * f)
    G = m @ XA.T                                          # G_kj = <m_k, A x_j>
    KG = K * G
    grad_x += (dt / N) * (KG @ XA + KG.T @ XA + (K.T @ m) @ A.matrix)
    return grad_x, grad_w


def backprop_gradient(controls: ControlPath, loss, init: UnitVectorEnsemble, A: AttentionSpec,
                      sigma: FeatureMap, cfg: SimConfig, lambda_reg: float,
                      noise: np.ndarray | None = None,
                      ) -> tuple[ControlPath, float, float]:
    """Exact gradient of the discretized objective by the discrete adjoint.

    ``noise`` freezes the Brownian increments; when omitted and eps > 0, the
    tensor implied by the config seed is used (the same one ``simulate`` draws).
    Returns (gradient path, objective value, terminal loss value).
    """
    if abs(cfg.horizon - controls.horizon) > 1e-9:
        raise ValueError(f"config horizon {cfg.horizon} != control horizon {controls.horizon}")
    spb = _steps_per_bin(controls, cfg)
    K_bins = controls.K
    if noise is None:
        noise = draw_noise_tensor(cfg, init.n, init.d)

    # forward pass, checkpointing the state at every bin boundary
    checkpoints = np.empty((K_bins + 1, init.n, init.d))
    checkpoints[0] = init.points
    X = init.points.copy()
    for k in range(cfg.steps):
        xi = noise[k] if (noise is not None and cfg.eps > 0) else None
        X = _step_core(X, A, controls.bins[k // spb], sigma, cfg.dt, cfg.eps, xi)
        if (k + 1) % spb == 0:
            checkpoints[(k + 1) // spb] = X

    terminal = UnitVectorEnsemble(X, init.time + cfg.horizon)
    terminal_loss = loss.value(terminal)
    obj = terminal_loss + 0.5 * lambda_reg * controls.l2_norm_sq()

    adj = loss.grad(terminal)
    grad_bins = np.zeros_like(controls.bins)
    inner = np.empty((spb, init.n, init.d))
    for b in range(K_bins - 1, -1, -1):
        W = controls.bins[b]
        inner[0] = checkpoints[b]
        for j in range(1, spb):
            k = b * spb + j - 1
            xi = noise[k] if (noise is not None and cfg.eps > 0) else None
            inner[j] = _step_core(inner[j - 1], A, W, sigma, cfg.dt, cfg.eps, xi)
        for j in range(spb - 1, -1, -1):
            k = b * spb + j
            xi = noise[k] if (noise is not None and cfg.eps > 0) else None
            adj, g_w = _step_vjp(inner[j], A, W, sigma, cfg.dt, cfg.eps, xi, adj)
            if not np.all(np.isfinite(adj)):
                raise FloatingPointError(f"non-finite adjoint state at step {k}")
            grad_bins[b] += g_w
    grad_bins += lambda_reg * controls.bins * controls.bin_width
    return ControlPath(grad_bins, controls.bin_width, controls.feature), obj, terminal_loss


@dataclass
class TrainResult:
    controls: ControlPath
    history: list[dict] = field(default_factory=list)
    diverged: bool = False


def train(init: UnitVectorEnsemble, loss, A: AttentionSpec, sigma: FeatureMap,
          cfg: SimConfig, train_cfg: TrainConfig, rng: RngStream,
          bin_width: float, controls0: ControlPath | None = None) -> TrainResult:
    """Adam descent on J(W) from zero controls (or ``controls0``).

    Noise is redrawn from a child stream of ``rng`` at every step when
    ``resample_noise`` is set (the default); otherwise one realization is
    drawn up front and reused, which makes the objective deterministic.
    """
    if controls0 is None:
        K = int(round(cfg.horizon / bin_width))
        if abs(K * bin_width - cfg.horizon) > 1e-9:
            raise ValueError(f"bin width {bin_width} does not divide the horizon {cfg.horizon}")
        controls = ControlPath.zeros(K, bin_width, feature=sigma, d=sigma.d)
    else:
        controls = ControlPath(controls0.bins.copy(), controls0.bin_width, controls0.feature)
    adam = AdamState.zeros_like(controls.bins)
    frozen = None
    if cfg.eps > 0 and not train_cfg.resample_noise:
        frozen = rng.child(0).generator().standard_normal((cfg.steps, init.n, init.d))

    history: list[dict] = []
    for step in range(train_cfg.steps):
        if cfg.eps > 0:
            noise = frozen if frozen is not None else \
                rng.child(step + 1).generator().standard_normal((cfg.steps, init.n, init.d))
        else:
            noise = None
        grad_path, obj, term_loss = backprop_gradient(
            controls, loss, init, A, sigma, cfg, train_cfg.lambda_reg, noise=noise)
        grad = grad_path.bins
        gnorm = float(np.sqrt(np.sum(grad * grad)))
        history.append({
            "step": step,
            "objective": obj,
            "terminal_loss": term_loss,
            "reg_term": obj - term_loss,
            "grad_norm": gnorm,
        })
        if not np.isfinite(obj):
            return TrainResult(controls, history, diverged=True)
        if train_cfg.grad_clip is not None and gnorm > train_cfg.grad_clip:
            grad = grad * (train_cfg.grad_clip / gnorm)
        controls = ControlPath(adam.update(controls.bins, grad, train_cfg.learning_rate),
                               controls.bin_width, controls.feature)
    return TrainResult(controls, history)
