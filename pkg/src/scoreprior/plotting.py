"""Tiny dependency-free SVG renderer for line and interval plots.

Output is plain text with fixed number formatting, so it is deterministic
like the CSV files it accompanies.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

WIDTH, HEIGHT, PAD = 640, 400, 50
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _scale(lo, hi, a, b):
    if hi <= lo:
        hi = lo + 1.0
    return lambda v: a + (np.asarray(v, dtype=float) - lo) / (hi - lo) * (b - a)


def _frame(title, xlabel, ylabel, xlim, ylim):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" '
           'fill="none" stroke="black"/>',
           f'<text x="{WIDTH / 2}" y="{PAD / 2}" text-anchor="middle">{title}</text>',
           f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>',
           f'<text x="12" y="{HEIGHT / 2}" transform="rotate(-90 12 {HEIGHT / 2})" '
           f'text-anchor="middle">{ylabel}</text>']
    for v, x in zip(np.linspace(*xlim, 5), np.linspace(PAD, WIDTH - PAD, 5)):
        out.append(f'<text x="{x:.1f}" y="{HEIGHT - PAD + 15}" font-size="10" '
                   f'text-anchor="middle">{v:.3g}</text>')
    for v, y in zip(np.linspace(*ylim, 5), np.linspace(HEIGHT - PAD, PAD, 5)):
        out.append(f'<text x="{PAD - 4}" y="{y:.1f}" font-size="10" '
                   f'text-anchor="end">{v:.3g}</text>')
    return out


def _limits(arrays):
    finite = np.concatenate([a[np.isfinite(a)] for a in arrays] or [np.zeros(1)])
    if finite.size == 0:
        return 0.0, 1.0
    return float(finite.min()), float(finite.max())


def line_plot(path, x, ys: Sequence, labels: Sequence[str] = (), title: str = "",
              xlabel: str = "", ylabel: str = "", max_points: int = 2000):
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in ys]
    stride = max(1, len(x) // max_points)
    xlim = _limits([x])
    ylim = _limits(ys)
    sx = _scale(*xlim, PAD, WIDTH - PAD)
    sy = _scale(*ylim, HEIGHT - PAD, PAD)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    for k, y in enumerate(ys):
        keep = np.isfinite(y[::stride])
        px, py = sx(x[::stride][keep]), sy(y[::stride][keep])
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        out.append(f'<polyline fill="none" stroke="{COLOURS[k % len(COLOURS)]}" '
                   f'points="{pts}"/>')
        if k < len(labels):
            out.append(f'<text x="{WIDTH - PAD - 5}" y="{PAD + 15 * (k + 1)}" font-size="11" '
                       f'text-anchor="end" fill="{COLOURS[k % len(COLOURS)]}">{labels[k]}</text>')
    out.append("</svg>")
    return _write(path, out)


def interval_plot(path, names: Sequence[str], centre, lower, upper, truth=None,
                  title: str = "", ylabel: str = ""):
    """Caterpillar plot: one vertical interval per coefficient."""
    centre, lower, upper = (np.asarray(a, dtype=float) for a in (centre, lower, upper))
    arrays = [lower, upper] + ([np.asarray(truth, dtype=float)] if truth is not None else [])
    ylim = _limits(arrays)
    k = len(names)
    xlim = (0.0, float(k + 1))
    sx = _scale(*xlim, PAD, WIDTH - PAD)
    sy = _scale(*ylim, HEIGHT - PAD, PAD)
    out = _frame(title, "", ylabel, xlim, ylim)
    for j in range(k):
        x = float(sx(j + 1))
        out.append(f'<line x1="{x:.2f}" x2="{x:.2f}" y1="{float(sy(lower[j])):.2f}" '
                   f'y2="{float(sy(upper[j])):.2f}" stroke="{COLOURS[0]}" stroke-width="2"/>')
        out.append(f'<circle cx="{x:.2f}" cy="{float(sy(centre[j])):.2f}" r="3" '
                   f'fill="{COLOURS[0]}"/>')
        if truth is not None:
            out.append(f'<circle cx="{x:.2f}" cy="{float(sy(truth[j])):.2f}" r="3" '
                       f'fill="none" stroke="{COLOURS[1]}"/>')
        out.append(f'<text x="{x:.2f}" y="{HEIGHT - PAD + 28}" font-size="10" '
                   f'text-anchor="middle">{names[j]}</text>')
    out.append("</svg>")
    return _write(path, out)


def _write(path, lines):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path
