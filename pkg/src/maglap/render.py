"""Static SVG output: polar specific-heat maps and embedding scatter plots.

The polar map puts ``2 pi q`` on the angle and ``T`` on the radius. Cells for
the stored half-circle carry ``class="cell"``; their reflections through
``q -> 1 - q`` carry ``class="cell-mirror"``.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .embed import EmbeddingCoords
from .thermo import HeatMap

# coarse viridis stops
_STOPS = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def colour(x: float) -> str:
    """Viridis-like colour for ``x`` in [0, 1]."""
    x = min(max(float(x), 0.0), 1.0) * (len(_STOPS) - 1)
    i = min(int(x), len(_STOPS) - 2)
    rgb = _STOPS[i] + (x - i) * (_STOPS[i + 1] - _STOPS[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _edges(centres: np.ndarray, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    c = np.asarray(centres, dtype=float)
    if c.size == 1:
        half = 0.5 if lo is None else max(c[0] - lo, 1e-9)
        e = np.array([c[0] - half, c[0] + half])
    else:
        mid = (c[1:] + c[:-1]) / 2
        e = np.concatenate([[c[0] - (mid[0] - c[0])], mid, [c[-1] + (c[-1] - mid[-1])]])
    if lo is not None:
        e[0] = max(e[0], lo)
    if hi is not None:
        e[-1] = min(e[-1], hi)
    return e


def _sector(cx, cy, r0, r1, a0, a1) -> str:
    # SVG y grows downwards; flip so angle increases counter-clockwise
    def pt(r, a):
        return cx + r * math.cos(a), cy - r * math.sin(a)

    large = 1 if (a1 - a0) > math.pi else 0
    x0, y0 = pt(r1, a0)
    x1, y1 = pt(r1, a1)
    x2, y2 = pt(r0, a1)
    x3, y3 = pt(r0, a0)
    return (f"M{x0:.3f},{y0:.3f} A{r1:.3f},{r1:.3f} 0 {large} 0 {x1:.3f},{y1:.3f} "
            f"L{x2:.3f},{y2:.3f} A{r0:.3f},{r0:.3f} 0 {large} 1 {x3:.3f},{y3:.3f} Z")


def polar_heatmap_svg(hm: HeatMap, size: int = 480, title: str | None = None) -> str:
    q = hm.q_grid
    Ts = hm.T_grid
    vals = hm.values
    finite = vals[np.isfinite(vals)]
    vmin, vmax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = vmax - vmin or 1.0
    cx = cy = size / 2
    rmax = size / 2 - 20
    t_edges = _edges(Ts, lo=0.0)
    r_edges = rmax * (t_edges - t_edges[0]) / (t_edges[-1] - t_edges[0] or 1.0)
    q_edges = _edges(q)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
    ]
    if title:
        parts.append(f"<title>{escape(title)}</title>")
    for i in range(Ts.size):
        for j in range(q.size):
            a0, a1 = 2 * math.pi * q_edges[j], 2 * math.pi * q_edges[j + 1]
            fill = colour((vals[i, j] - vmin) / span) if np.isfinite(vals[i, j]) else "#ffffff"
            d = _sector(cx, cy, r_edges[i], r_edges[i + 1], a0, a1)
            parts.append(f'<path class="cell" d="{d}" fill="{fill}"/>')
            m = _sector(cx, cy, r_edges[i], r_edges[i + 1], 2 * math.pi - a1, 2 * math.pi - a0)
            parts.append(f'<path class="cell-mirror" d="{m}" fill="{fill}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(coords: EmbeddingCoords | np.ndarray, labels: Sequence | None = None, size: int = 480,
                title: str | None = None) -> str:
    """First two coordinates as points, coloured by label."""
    X = coords.coords if isinstance(coords, EmbeddingCoords) else np.asarray(coords, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("scatter needs at least two coordinates per point")
    lo, hi = X[:, :2].min(axis=0), X[:, :2].max(axis=0)
    scale = np.where(hi > lo, hi - lo, 1.0)
    pad = 15
    P = pad + (X[:, :2] - lo) / scale * (size - 2 * pad)
    classes = list(dict.fromkeys(labels)) if labels is not None else [None]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
    ]
    if title:
        parts.append(f"<title>{escape(title)}</title>")
    for k, (x, y) in enumerate(P):
        lab = labels[k] if labels is not None else None
        fill = _PALETTE[classes.index(lab) % len(_PALETTE)]
        parts.append(f'<circle class="point" cx="{x:.3f}" cy="{size - y:.3f}" r="2.5" fill="{fill}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
