"""Minimal deterministic SVG line plots for phase diagrams.

Output depends only on the input numbers (fixed coordinate formatting, no
timestamps or ids), so identical records give byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 140, 40, 55
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass
class Curve:
    label: str
    points: list  # (x, y) pairs; non-finite points break the line


@dataclass
class PlotSpec:
    title: str
    xlabel: str
    ylabel: str
    curves: list = field(default_factory=list)


def _fmt(v):
    return f"{v:.2f}"


def _esc(text):
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _finite(points):
    return [(x, y) for x, y in points if math.isfinite(x) and math.isfinite(y)]


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(spec: PlotSpec) -> str:
    pts = [p for c in spec.curves for p in _finite(c.points)]
    if not pts:
        raise ValueError("nothing to plot: no finite points")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{_esc(spec.title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{MARGIN_T + ph}" x2="{_fmt(X)}" '
                   f'y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{MARGIN_T + ph + 20}" text-anchor="middle" '
                   f'font-size="11" font-family="sans-serif">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(Y)}" x2="{MARGIN_L}" '
                   f'y2="{_fmt(Y)}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(Y + 4)}" text-anchor="end" '
                   f'font-size="11" font-family="sans-serif">{t:.4g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-size="13" font-family="sans-serif">{_esc(spec.xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.0f}" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif" transform="rotate(-90 16 {MARGIN_T + ph / 2:.0f})">'
               f'{_esc(spec.ylabel)}</text>')

    for i, curve in enumerate(spec.curves):
        color = PALETTE[i % len(PALETTE)]
        segments, seg = [], []
        for x, y in curve.points:
            if math.isfinite(x) and math.isfinite(y):
                seg.append((x, y))
            elif seg:
                segments.append(seg)
                seg = []
        if seg:
            segments.append(seg)
        for seg in segments:
            if len(seg) == 1:
                x, y = seg[0]
                out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3.5" fill="{color}"/>')
            else:
                path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in seg)
                out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = WIDTH - MARGIN_R + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="11" '
                   f'font-family="sans-serif">{_esc(curve.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(records, spec: PlotSpec, path) -> Path:
    """Write ``spec`` rendered as SVG; refuses an empty record set."""
    if not records:
        raise ValueError("empty record set: no SVG written")
    text = render_svg(spec)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
