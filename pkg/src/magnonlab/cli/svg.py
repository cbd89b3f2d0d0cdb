"""Minimal SVG 1.1 line charts: axes, ticks, polylines, legend."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#555555")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 55


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _range(values) -> tuple[float, float]:
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def line_chart(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    ylim: Optional[tuple[float, float]] = None,
) -> str:
    """One chart; ``series`` is a list of ``(label, x, y)``.  Non-finite points break the line."""
    xs = np.concatenate([np.asarray(x, float) for _, x, _ in series]) if series else np.array([])
    ys = np.concatenate([np.asarray(y, float) for _, _, y in series]) if series else np.array([])
    x0, x1 = _range(xs)
    y0, y1 = ylim if ylim else _range(ys)
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{t:.6g}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{t:.6g}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>')
    for i, (label, x, y) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        for run in _finite_runs(np.asarray(x, float), np.asarray(y, float)):
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in run)
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5" clip-path="url(#plot)"/>'
            )
        ly = TOP + 14 + 16 * i
        out.append(f'<line x1="{LEFT + pw - 150}" y1="{ly}" x2="{LEFT + pw - 130}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 125}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _finite_runs(x, y):
    run = []
    for a, b in zip(x, y):
        if math.isfinite(a) and math.isfinite(b):
            run.append((a, b))
        elif run:
            yield run
            run = []
    if run:
        yield run


def write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
