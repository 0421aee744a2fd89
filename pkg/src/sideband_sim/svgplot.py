"""Minimal standalone SVG line plots (axes, ticks, one series per file).

Figures are for human inspection; the CSV files are the contract.
"""

from __future__ import annotations

import math
from typing import Sequence

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _nice_ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def save_line_svg(path: str, x: Sequence[float], y: Sequence[float],
                  xlabel: str = "", ylabel: str = "", title: str = "") -> None:
    x = list(map(float, x))
    y = list(map(float, y))
    x0, x1 = min(x), max(x)
    y0, y1 = min(y), max(y)
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return _ML + (v - x0) / (x1 - x0) * (_W - _ML - _MR)

    def py(v):
        return _H - _MB - (v - y0) / (y1 - y0) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="18" text-anchor="middle" '
        f'font-size="14">{title}</text>',
    ]
    axis_style = 'stroke="black" stroke-width="1"'
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" '
                 f'y2="{_H - _MB}" {axis_style}/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
                 f'{axis_style}/>')
    for t in _nice_ticks(x0, x1):
        if not x0 <= t <= x1:
            continue
        parts.append(f'<line x1="{px(t):.1f}" y1="{_H - _MB}" '
                     f'x2="{px(t):.1f}" y2="{_H - _MB + 5}" {axis_style}/>')
        parts.append(f'<text x="{px(t):.1f}" y="{_H - _MB + 18}" '
                     f'text-anchor="middle" font-size="11">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        if not y0 <= t <= y1:
            continue
        parts.append(f'<line x1="{_ML - 5}" y1="{py(t):.1f}" x2="{_ML}" '
                     f'y2="{py(t):.1f}" {axis_style}/>')
        parts.append(f'<text x="{_ML - 8}" y="{py(t):.1f}" dy="4" '
                     f'text-anchor="end" font-size="11">{t:g}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 12}" '
                 f'text-anchor="middle" font-size="12">{xlabel}</text>')
    y_mid = (_MT + _H - _MB) / 2
    parts.append(f'<text x="16" y="{y_mid:.0f}" text-anchor="middle" '
                 f'font-size="12" transform="rotate(-90 16 {y_mid:.0f})">'
                 f'{ylabel}</text>')
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#c23b22" '
                 f'stroke-width="1.5"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
