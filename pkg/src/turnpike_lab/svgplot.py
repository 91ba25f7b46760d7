"""Hand-rolled SVG line plots.

matplotlib embeds nondeterministic ids and timestamps in its SVG output, so
the experiment harness writes its own: identical inputs give identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 24, 40, 56

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _axis_range(lo: float, hi: float) -> tuple[float, float]:
    """Data extrema padded by a 5% margin on each side."""
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise ValueError("non-finite data extrema")
    if hi == lo:
        pad = 0.5 if hi == 0 else abs(hi) * 0.05
    else:
        pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def line_plot_svg(path: str | Path, series: list[tuple[np.ndarray, np.ndarray]],
                  title: str, xlabel: str, ylabel: str,
                  labels: list[str] | None = None, markers: bool = False) -> Path:
    """Write a standalone SVG with one polyline per series."""
    if not series:
        raise ValueError("no series to plot")
    for x, y in series:
        if len(x) == 0 or len(x) != len(y):
            raise ValueError("every series needs matching nonempty x and y")
    xlo, xhi = _axis_range(min(float(np.min(x)) for x, _ in series),
                           max(float(np.max(x)) for x, _ in series))
    ylo, yhi = _axis_range(min(float(np.min(y)) for _, y in series),
                           max(float(np.max(y)) for _, y in series))

    def sx(v: float) -> float:
        return MARGIN_L + (v - xlo) / (xhi - xlo) * (WIDTH - MARGIN_L - MARGIN_R)

    def sy(v: float) -> float:
        return HEIGHT - MARGIN_B - (v - ylo) / (yhi - ylo) * (HEIGHT - MARGIN_T - MARGIN_B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
    ]
    # frame and ticks
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
                 f'fill="none" stroke="black" stroke-width="1"/>')
    for i in range(5):
        xv = xlo + (xhi - xlo) * i / 4
        yv = ylo + (yhi - ylo) * i / 4
        parts.append(f'<line x1="{sx(xv):.2f}" y1="{y0}" x2="{sx(xv):.2f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(xv):.2f}" y="{y0 + 20}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{xv:.4g}</text>')
        parts.append(f'<line x1="{x0 - 5}" y1="{sy(yv):.2f}" x2="{x0}" y2="{sy(yv):.2f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{sy(yv) + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{yv:.4g}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">{ylabel}</text>')

    for k, (x, y) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{sx(float(a)):.2f},{sy(float(b)):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        if markers:
            for a, b in zip(x, y):
                parts.append(f'<circle cx="{sx(float(a)):.2f}" cy="{sy(float(b)):.2f}" r="3" fill="{color}"/>')
        if labels and k < len(labels):
            parts.append(f'<text x="{x1 - 8}" y="{MARGIN_T + 16 + 14 * k}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="11" fill="{color}">{labels[k]}</text>')
    parts.append("</svg>")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")
    return out
