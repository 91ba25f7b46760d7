"""Deterministic file output: CSV schemas shared by the experiment runs.

All floats are written with 17 significant digits, LF line endings, UTF-8.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV written by this module; returns (header, (n, c) array)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = [line.strip().split(",") for line in fh if line.strip()]
    if not data:
        return header, np.empty((0, len(header)))
    return header, np.asarray(data, dtype=float)


def write_trajectory_csv(path, times: np.ndarray, states: np.ndarray) -> Path:
    """Particle coordinates: t,particle,x0,...,x{d-1}."""
    d = states.shape[2]
    header = ["t", "particle"] + [f"x{j}" for j in range(d)]
    rows = (
        [t, i] + list(states[r, i])
        for r, t in enumerate(times)
        for i in range(states.shape[1])
    )
    return write_csv(path, header, rows)


def write_angular_csv(path, times: np.ndarray, angles: np.ndarray) -> Path:
    """Signed angles: t,particle,theta with angles of shape (records, N)."""
    rows = (
        (t, i, angles[r, i])
        for r, t in enumerate(times)
        for i in range(angles.shape[1])
    )
    return write_csv(path, ["t", "particle", "theta"], rows)


def write_energy_csv(path, times, interaction, entropy, total, gap=None) -> Path:
    """Energy series; the 5-column variant with the gap is the experiment schema."""
    if gap is None:
        rows = zip(times, interaction, entropy, total)
        return write_csv(path, ["t", "interaction", "entropy", "total"], rows)
    rows = zip(times, interaction, entropy, total, gap)
    return write_csv(path, ["t", "interaction", "entropy", "total", "gap"], rows)


def write_rate_csv(path, rows: Iterable[Sequence]) -> Path:
    return write_csv(path, ["param", "fitted_a", "fitted_C", "rms_residual", "rayleigh_rate"], rows)


def write_grid_path_csv(path, times: np.ndarray, thetas: np.ndarray, values: np.ndarray) -> Path:
    """Density or costate paths: t,theta,value with values of shape (times, thetas)."""
    rows = (
        (t, th, values[r, m])
        for r, t in enumerate(times)
        for m, th in enumerate(thetas)
    )
    return write_csv(path, ["t", "theta", "value"], rows)


def write_history_csv(path, history: list[dict]) -> Path:
    rows = (
        (h["step"], h["objective"], h["terminal_loss"], h["reg_term"], h["grad_norm"])
        for h in history
    )
    return write_csv(path, ["step", "objective", "terminal_loss", "reg_term", "grad_norm"], rows)
