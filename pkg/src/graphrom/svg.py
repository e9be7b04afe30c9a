"""Minimal static SVG line charts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_chart(series: dict, xlabel: str, ylabel: str, width: int = 640, height: int = 400,
               log_y: bool = False) -> str:
    """Render ``{name: (x, y)}`` polylines with a legend and labelled axes."""
    pad = 60
    tr = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    xs = [float(x) for xv, _ in series.values() for x in xv]
    ys = [tr(float(y)) for _, yv in series.values() for y in yv]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (tr(y) - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle">{escape(xlabel)}</text>',
             f'<text x="15" y="{height / 2}" transform="rotate(-90 15 {height / 2})" '
             f'text-anchor="middle">{escape(ylabel + (" (log10)" if log_y else ""))}</text>',
             f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{x0:.4g}</text>',
             f'<text x="{width - pad}" y="{height - pad + 15}" font-size="10" text-anchor="end">{x1:.4g}</text>',
             f'<text x="{pad - 5}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.4g}</text>',
             f'<text x="{pad - 5}" y="{pad}" font-size="10" text-anchor="end">{y1:.4g}</text>']
    for k, (name, (xv, yv)) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xv, yv))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 5}" y="{pad + 15 * k}" font-size="11" fill="{color}">'
                     f'{escape(str(name))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
