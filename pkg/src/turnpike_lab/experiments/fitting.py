"""Log-linear fit of the terminal energy lift C exp(-a (T - t))."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAP_FLOOR = 1e-12
DEFAULT_WINDOW_SPAN = 10.0


class NoDetectableLiftError(ValueError):
    """Fewer than four usable points above the gap floor inside the fit window."""


@dataclass(frozen=True)
class FitResult:
    C: float
    a: float
    window: tuple[float, float]
    points_used: int
    rms_log_residual: float


def fit_terminal_rate(gap_series: np.ndarray, window: tuple[float, float] | None = None,
                      floor: float = GAP_FLOOR) -> FitResult:
    """Ordinary least squares of log(gap) against (T - t).

    ``gap_series`` holds rows (t, gap). The default window is the last 10 time
    units; points within 10x of the floor are excluded as numerically dead.
    """
    series = np.asarray(gap_series, dtype=float)
    if series.ndim != 2 or series.shape[1] != 2:
        raise ValueError("gap series must be rows of (t, gap)")
    t, gap = series[:, 0], series[:, 1]
    T = float(np.max(t))
    if window is None:
        window = (T - DEFAULT_WINDOW_SPAN, T)
    usable = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12) & (gap > 10.0 * floor)
    if int(np.sum(usable)) < 4:
        raise NoDetectableLiftError(
            f"no detectable lift: {int(np.sum(usable))} usable points in window {window}")
    x = T - t[usable]
    y = np.log(gap[usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitResult(
        C=float(np.exp(intercept)),
        a=float(-slope),
        window=(float(window[0]), float(window[1])),
        points_used=int(np.sum(usable)),
        rms_log_residual=float(np.sqrt(np.mean(resid ** 2))),
    )


def rank_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Spearman rank correlation of two equal-length sequences."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt(np.sum(ra ** 2) * np.sum(rb ** 2))
    if denom == 0:
        return 0.0
    return float(np.sum(ra * rb) / denom)
