"""Minimal dependency-free SVG line charts for tail curves."""

from __future__ import annotations

_W, _H = 640, 400
_MARGIN = 56
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in vals]


def svg_line_chart(title: str, series: list[tuple[str, list, list]]) -> str:
    """series: list of (label, xs, ys); ys expected in [0, 1]."""
    xs_all = [x for _, xs, _ in series for x in xs]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - 20}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_MARGIN}" y2="40" stroke="black"/>',
        f'<text x="{_MARGIN - 8}" y="{_H - _MARGIN + 4}" text-anchor="end" font-size="11">0</text>',
        f'<text x="{_MARGIN - 8}" y="44" text-anchor="end" font-size="11">1</text>',
        f'<text x="{_MARGIN}" y="{_H - _MARGIN + 18}" text-anchor="middle" font-size="11">{x_lo:g}</text>',
        f'<text x="{_W - 20}" y="{_H - _MARGIN + 18}" text-anchor="middle" font-size="11">{x_hi:g}</text>',
    ]
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        px = _scale(xs, x_lo, x_hi, _MARGIN, _W - 20)
        py = _scale(ys, 0.0, 1.0, _H - _MARGIN, 40)
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        parts.append(
            f'<text x="{_W - 24}" y="{56 + 16 * i}" text-anchor="end" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
