"""Layerwise FFN controls: feature maps sigma and piecewise-constant parameter paths."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FeatureMap:
    """The feature map sigma: R^d -> R^p of the parameter-linear FFN u_W(x) = W sigma(x).

    Two variants:
      identity      sigma(x) = x, p = d (any d).
      fourier(m)    circular harmonics (1, cos k theta, sin k theta)_{k<=m}
                    realized as harmonic polynomials of x, p = 1 + 2m, d = 2.
    """

    variant: str = "identity"
    order: int = 0
    d: int = 2

    def __post_init__(self):
        if self.variant == "identity":
            if self.d < 1:
                raise ValueError("identity features need d >= 1")
        elif self.variant == "fourier":
            if self.d != 2:
                raise ValueError("fourier features are defined on the circle (d=2)")
            if self.order < 1:
                raise ValueError("fourier order must be >= 1")
        else:
            raise ValueError(f"unknown feature variant {self.variant!r}")

    @property
    def p(self) -> int:
        return self.d if self.variant == "identity" else 1 + 2 * self.order

    @property
    def c_sigma(self) -> float:
        """C_sigma = sup |sigma|^2 / 2 over the sphere."""
        if self.variant == "identity":
            return 0.5
        return 0.5 * (1.0 + self.order)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        """Evaluate sigma at row-stacked points, (N, d) -> (N, p)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"points have dimension {X.shape[1]}, feature map expects {self.d}")
        if self.variant == "identity":
            return X.copy()
        z = X[:, 0] + 1j * X[:, 1]
        out = np.empty((X.shape[0], self.p))
        out[:, 0] = 1.0
        zk = np.ones_like(z)
        for k in range(1, self.order + 1):
            zk = zk * z
            out[:, 2 * k - 1] = zk.real
            out[:, 2 * k] = zk.imag
        return out

    def jac_t_vec(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Per-row Jacobian-transpose products: row i is (d sigma/dx)(x_i)^T u_i."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if self.variant == "identity":
            return U.copy()
        z = X[:, 0] + 1j * X[:, 1]
        out = np.zeros((X.shape[0], 2))
        zk = np.ones_like(z)  # z^{k-1}
        for k in range(1, self.order + 1):
            a, b = zk.real, zk.imag
            # grad Re(z^k) = k (a, -b), grad Im(z^k) = k (b, a) with z^{k-1} = a + ib
            u_c = U[:, 2 * k - 1]
            u_s = U[:, 2 * k]
            out[:, 0] += k * (a * u_c + b * u_s)
            out[:, 1] += k * (-b * u_c + a * u_s)
            zk = zk * z
        return out

    def descriptor(self) -> dict:
        return {"variant": self.variant, "order": self.order, "d": self.d}

    @classmethod
    def from_descriptor(cls, desc: dict) -> "FeatureMap":
        return cls(variant=desc["variant"], order=int(desc.get("order", 0)), d=int(desc.get("d", 2)))


@dataclass
class ControlPath:
    """Piecewise-constant d x p parameter matrices over K equal time bins."""

    bins: np.ndarray  # (K, d, p)
    bin_width: float
    feature: FeatureMap = field(default_factory=FeatureMap)

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=float)
        if self.bins.ndim != 3 or self.bins.shape[0] < 1:
            raise ValueError(f"bins must be a (K, d, p) array with K >= 1, got shape {self.bins.shape}")
        if not np.all(np.isfinite(self.bins)):
            raise ValueError("control entries must be finite")
        if self.bin_width <= 0:
            raise ValueError(f"bin width must be > 0, got {self.bin_width}")

    @classmethod
    def zeros(cls, K: int, bin_width: float, feature: FeatureMap | None = None, d: int = 2) -> "ControlPath":
        feature = feature or FeatureMap(d=d)
        return cls(np.zeros((K, feature.d, feature.p)), bin_width, feature)

    @property
    def K(self) -> int:
        return self.bins.shape[0]

    @property
    def horizon(self) -> float:
        return self.K * self.bin_width

    def bin_index(self, t: float) -> int:
        # half-open bins [k*w, (k+1)*w); the terminal time belongs to the last bin
        k = int(np.floor(t / self.bin_width + 1e-12))
        return min(max(k, 0), self.K - 1)

    def value_at(self, t: float) -> np.ndarray:
        return self.bins[self.bin_index(t)]

    def l2_norm_sq(self) -> float:
        """Squared L^2(0,T) norm: sum_k ||W_k||_F^2 * bin_width."""
        return float(np.sum(self.bins ** 2) * self.bin_width)

    def scaled(self, c: float) -> "ControlPath":
        return ControlPath(c * self.bins, self.bin_width, self.feature)

    def to_json(self) -> str:
        payload = {
            "bin_width": self.bin_width,
            "horizon": self.horizon,
            "shape": list(self.bins.shape),
            "bins_row_major": self.bins.ravel(order="C").tolist(),
            "feature_map": self.feature.descriptor(),
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ControlPath":
        payload = json.loads(text)
        shape = tuple(payload["shape"])
        bins = np.asarray(payload["bins_row_major"], dtype=float).reshape(shape, order="C")
        feature = FeatureMap.from_descriptor(payload["feature_map"])
        return cls(bins, float(payload["bin_width"]), feature)
