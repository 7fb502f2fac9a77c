"""Minimal SVG line plots (no plotting dependency)."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H, PAD = 640, 420, 60


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda x: a + (x - lo) * (b - a) / span


def line_plot(series: dict[str, tuple[Sequence[float], Sequence[float]]], *,
              title: str = "", xlabel: str = "", ylabel: str = "", loglog: bool = False,
              dashed: Sequence[str] = ()) -> str:
    """Render named ``(x, y)`` polylines; nonpositive points are skipped on log axes."""
    tf = (lambda t: math.log10(t)) if loglog else float
    pts = {}
    for name, (xs, ys) in series.items():
        pts[name] = [(tf(x), tf(y)) for x, y in zip(xs, ys)
                     if not loglog or (x > 0 and y > 0)]
    allp = [p for v in pts.values() for p in v]
    if not allp:
        allp = [(0.0, 0.0), (1.0, 1.0)]
    xs = [p[0] for p in allp]
    ys = [p[1] for p in allp]
    sx = _scale(min(xs), max(xs), PAD, W - PAD)
    sy = _scale(min(ys), max(ys), H - PAD, PAD)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
           'fill="none" stroke="black"/>']
    pre = "log10 " if loglog else ""
    out.append(f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle">{escape(pre + xlabel)}</text>')
    out.append(f'<text x="15" y="{H / 2}" transform="rotate(-90 15 {H / 2})" '
               f'text-anchor="middle">{escape(pre + ylabel)}</text>')
    for v, anchor, x, y in ((min(xs), "start", PAD, H - PAD + 15), (max(xs), "end", W - PAD, H - PAD + 15)):
        out.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3g}</text>')
    for v, y in ((min(ys), H - PAD), (max(ys), PAD + 10)):
        out.append(f'<text x="{PAD - 5}" y="{y}" text-anchor="end">{v:.3g}</text>')
    for i, (name, p) in enumerate(pts.items()):
        col = _COLORS[i % len(_COLORS)]
        if p:
            path = " ".join(f"{'M' if k == 0 else 'L'}{sx(a):.2f},{sy(b):.2f}" for k, (a, b) in enumerate(p))
            dash = ' stroke-dasharray="6,4"' if name in dashed else ""
            out.append(f'<path d="{path}" fill="none" stroke="{col}" stroke-width="1.5"{dash}/>')
            if len(p) < 30:
                out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{col}"/>' for a, b in p)
        out.append(f'<text x="{W - PAD - 5}" y="{PAD + 15 + 15 * i}" text-anchor="end" '
                   f'fill="{col}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
