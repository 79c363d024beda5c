"""Byte-stable log-log regret chart."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

from ..errors import EmptyInput
from .slope import SlopeFit, _points

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60


def _f(x: float) -> str:
    return f"{x:.2f}"


def emit_svg(rows, fit: SlopeFit | None = None, *, column: str = "count_based_regret",
             title: str = "regret vs horizon") -> str:
    pts = [(n, r) for n, r in _points(rows, column) if n > 0 and r > 0]
    if not pts:
        raise EmptyInput("no positive (n, regret) points to plot")
    lx = [math.log10(n) for n, _ in pts]
    ly = [math.log10(r) for _, r in pts]
    if fit is not None:
        shift = (lambda x: 0.5 * math.log(x)) if fit.correction == "sqrtlog" else (lambda x: 0.0)
        line = [(x, (fit.intercept + fit.slope * x + shift(x)) / math.log(10)) for x in fit.log_n]
        ly += [y for _, y in line]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for decade in range(math.ceil(x0), math.floor(x1) + 1):
        out.append(f'<line x1="{_f(px(decade))}" y1="{TOP}" x2="{_f(px(decade))}" y2="{TOP + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{_f(px(decade))}" y="{TOP + ph + 18}" text-anchor="middle" font-size="12">1e{decade}</text>')
    for decade in range(math.ceil(y0), math.floor(y1) + 1):
        out.append(f'<line x1="{LEFT}" y1="{_f(py(decade))}" x2="{LEFT + pw}" y2="{_f(py(decade))}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_f(py(decade) + 4)}" text-anchor="end" font-size="12">1e{decade}</text>')
    out.append(f'<text x="{LEFT + pw // 2}" y="{HEIGHT - 16}" text-anchor="middle" font-size="13">horizon n</text>')
    out.append(f'<text x="18" y="{TOP + ph // 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 18 {TOP + ph // 2})">{escape(column)}</text>')
    if fit is not None:
        coords = " ".join(f"{_f(px(x / math.log(10)))},{_f(py(y))}" for x, y in line)
        out.append(f'<polyline points="{coords}" fill="none" stroke="#c0392b" stroke-width="2"/>')
        label = f"slope {fit.slope:.3f}" + (" (sqrt-log corrected)" if fit.correction == "sqrtlog" else "")
        out.append(f'<text x="{LEFT + pw - 8}" y="{TOP + 18}" text-anchor="end" font-size="13" '
                   f'fill="#c0392b">{escape(label)}</text>')
    for x, y in zip(lx, ly):
        out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="4" fill="#2c3e50"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
