"""Static SVG: one heatmap strip per caption with interval bars underneath."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .core import BoundarySet
from .simatrix import SimilarityMatrix

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
LABEL_W = 70
STRIP_H = 14
BAR_H = 6
GAP = 6
PLOT_W = 900.0


def _shade(v: float) -> str:
    # white -> dark blue
    lo, hi = np.array([255, 255, 255]), np.array([8, 48, 107])
    r, g, b = (lo + (hi - lo) * v).round().astype(int)
    return f"#{r:02x}{g:02x}{b:02x}"


def render_svg(
    s: SimilarityMatrix, layers: Sequence[tuple[str, BoundarySet]] = (), title: str = ""
) -> str:
    """``layers`` are (label, boundaries) pairs; each adds one bar row per caption."""
    m, n = s.shape
    for label, bset in layers:
        if len(bset) not in (0, n):
            raise ValueError(f"layer {label!r} has {len(bset)} events for {n} captions")
    cw = PLOT_W / m
    vals = s.values
    lo, hi = float(vals.min()), float(vals.max())
    norm = (vals - lo) / (hi - lo) if hi > lo else np.zeros_like(vals)

    block_h = STRIP_H + len(layers) * (BAR_H + 2) + GAP
    legend_h = 16 * len(layers)
    top = 24
    height = top + n * block_h + legend_h + 8
    width = LABEL_W + PLOT_W + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif" font-size="10">',
        f'<text x="4" y="14" font-size="12">{escape(title)} ({m} frames x {n} captions)</text>',
    ]
    for c in range(n):
        y0 = top + c * block_h
        out.append(f'<text x="4" y="{y0 + STRIP_H - 3}">caption {c}</text>')
        out.append(f'<g class="heat" data-caption="{c}">')
        for f in range(m):
            x = LABEL_W + f * cw
            out.append(
                f'<rect x="{x:.2f}" y="{y0}" width="{cw:.2f}" height="{STRIP_H}" fill="{_shade(norm[f, c])}"/>'
            )
        out.append("</g>")
        for k, (label, bset) in enumerate(layers):
            if not len(bset):
                continue
            b = bset[c]
            y = y0 + STRIP_H + 2 + k * (BAR_H + 2)
            color = PALETTE[k % len(PALETTE)]
            out.append(
                f'<rect class="bar" data-layer="{k}" x="{LABEL_W + b.start * cw:.2f}" y="{y}" '
                f'width="{max(b.duration * cw, 0.5):.2f}" height="{BAR_H}" fill="{color}"/>'
            )
    y = top + n * block_h
    for k, (label, _) in enumerate(layers):
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<rect x="4" y="{y + 16 * k + 2}" width="10" height="8" fill="{color}"/>')
        out.append(f'<text x="18" y="{y + 16 * k + 10}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
