"""Geometry and sampling on the unit sphere S^{d-1}.

Points are plain numpy arrays of unit Euclidean norm. Angular helpers
(signed angle, von Mises sampling) are specific to the circle d=2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-12


def _splitmix64(z: int) -> int:
    # SplitMix64 finalizer; pure 64-bit integer arithmetic, platform independent.
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by (seed, stream_id).

    The same pair yields the same draw sequence on every platform (PCG64
    seeded through numpy's SeedSequence). Derived streams are obtained with
    :meth:`child`; concurrent workers must each hold a distinct stream.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """Derive a decorrelated stream for sub-purpose ``index``.

        stream_id mixing uses the SplitMix64 finalizer so nested derivations
        do not collide for any practical index set.
        """
        mixed = _splitmix64((self.stream_id * 0x100000001B3 + index) & 0xFFFFFFFFFFFFFFFF)
        return RngStream(self.seed, mixed)


def unit_vector(coords) -> np.ndarray:
    """Validate and return a unit vector as a float64 array."""
    x = np.asarray(coords, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d coordinate array, got shape {x.shape}")
    n = np.linalg.norm(x)
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"norm {n!r} deviates from 1 by more than {UNIT_TOL}")
    return x


def basis_vector(d: int, axis: int = 0) -> np.ndarray:
    e = np.zeros(d)
    e[axis] = 1.0
    return e


def project_tangent(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project ``v`` onto the tangent space at ``x``: v - <v,x> x."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {v.shape}")
    return v - np.dot(v, x) * x


def retract(x: np.ndarray, step: np.ndarray) -> np.ndarray:
    """Move to x + step and renormalize onto the sphere."""
    y = np.asarray(x, dtype=float) + np.asarray(step, dtype=float)
    n = np.linalg.norm(y)
    if n < 1e-300 or not np.isfinite(n):
        raise FloatingPointError("retraction through the origin: step blow-up, abort integration")
    return y / n


def sample_vmf(mean: np.ndarray, kappa: float, n: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. samples from the von Mises density ~ exp(kappa <x, mean>) on S^1.

    Only the circle is supported; the sampler is the standard wrapped-Cauchy
    rejection method (Best & Fisher) as provided by numpy's ``vonmises``.
    """
    mean = unit_vector(mean)
    if mean.shape[0] != 2:
        raise ValueError("von Mises sampling is only implemented on the circle (d=2)")
    if not np.isfinite(kappa) or kappa < 0:
        raise ValueError(f"concentration must be finite and >= 0, got {kappa}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    mu = float(np.arctan2(mean[1], mean[0]))
    if kappa == 0.0:
        theta = gen.uniform(-np.pi, np.pi, size=n) + mu
    else:
        theta = gen.vonmises(mu, kappa, size=n)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def sample_cap_init(s: float, n: int, rng: RngStream | np.random.Generator, d: int = 2) -> np.ndarray:
    """Initial ensemble: normalize(e_1 + s*xi) with xi standard normal in R^d."""
    if s < 0:
        raise ValueError(f"cap width must be >= 0, got {s}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    e1 = basis_vector(d)
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        xi = gen.standard_normal((n - filled, d))
        y = e1[None, :] + s * xi
        norms = np.linalg.norm(y, axis=1)
        ok = norms > 1e-300  # zero-norm intermediate has probability zero; retry if seen
        y = y[ok] / norms[ok][:, None]
        out[filled:filled + y.shape[0]] = y
        filled += y.shape[0]
    return out


def signed_angle(x: np.ndarray, reference: np.ndarray) -> float:
    """Angle of ``x`` counterclockwise from ``reference``, in (-pi, pi].

    The antipode maps to +pi (not -pi) so that CSV output is deterministic.
    """
    x = unit_vector(x)
    reference = unit_vector(reference)
    if x.shape[0] != 2:
        raise ValueError("signed_angle is defined on the circle (d=2)")
    cross = reference[0] * x[1] - reference[1] * x[0]
    dot = float(np.dot(x, reference))
    angle = float(np.arctan2(cross, dot))
    if angle <= -np.pi + 0.0:  # arctan2(-0.0, -1.0) returns -pi; fold to +pi
        angle = np.pi
    return angle


def signed_angles(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Vectorized :func:`signed_angle` over the rows of an (N, 2) array."""
    reference = unit_vector(reference)
    pts = np.asarray(points, dtype=float)
    cross = reference[0] * pts[:, 1] - reference[1] * pts[:, 0]
    dot = pts @ reference
    angle = np.arctan2(cross, dot)
    angle[angle <= -np.pi] = np.pi
    return angle
