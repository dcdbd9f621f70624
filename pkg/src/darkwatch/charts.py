"""Static SVG charts built from precomputed chart data.

Output is a pure function of the inputs (fixed number formatting, no
timestamps) so repeated runs produce identical bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 50, 90
PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
           "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd")


def _num(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".") if math.isfinite(x) else "0"


def _doc(title: str, body: list[str], width: int = WIDTH, height: int = HEIGHT) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    title_el = (f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
                f'font-size="16">{escape(title)}</text>')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', title_el,
                      *body, "</svg>"]) + "\n"


def _axes(ymax: float, ylabel: str, xlabel: str) -> list[str]:
    x0, y0 = LEFT, HEIGHT - BOTTOM
    out = [
        f'<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - RIGHT}" y2="{y0}" stroke="black"/>',
        f'<text x="{(x0 + WIDTH - RIGHT) / 2:.0f}" y="{HEIGHT - 10}" '
        f'text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{(TOP + y0) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(TOP + y0) / 2:.0f})">{escape(ylabel)}</text>',
    ]
    for i in range(6):
        v = ymax * i / 5
        y = y0 - (y0 - TOP) * i / 5
        out.append(f'<text x="{x0 - 6}" y="{_num(y + 4)}" text-anchor="end">{_num(v)}</text>')
    return out


def _scale(ymax: float):
    span = HEIGHT - BOTTOM - TOP
    return lambda v: span * (v / ymax if ymax > 0 else 0.0)


def bar_chart(labels, values, title: str, xlabel: str = "", ylabel: str = "") -> str:
    values = [float(v) for v in values]
    ymax = max(values + [0.0]) or 1.0
    h = _scale(ymax)
    slot = (WIDTH - LEFT - RIGHT) / max(len(values), 1)
    base = HEIGHT - BOTTOM
    body = _axes(ymax, ylabel, xlabel)
    for i, (label, v) in enumerate(zip(labels, values)):
        x = LEFT + i * slot + slot * 0.15
        body.append(f'<rect x="{_num(x)}" y="{_num(base - h(v))}" width="{_num(slot * 0.7)}" '
                    f'height="{_num(h(v))}" fill="{PALETTE[i % len(PALETTE)]}"/>')
        body.append(f'<text x="{_num(x + slot * 0.35)}" y="{_num(base - h(v) - 4)}" '
                    f'text-anchor="middle">{_num(v)}</text>')
        body.append(f'<text x="{_num(x + slot * 0.35)}" y="{base + 16}" '
                    f'text-anchor="middle">{escape(str(label))}</text>')
    return _doc(title, body)


def grouped_bar_chart(labels, series: dict, title: str, xlabel: str = "", ylabel: str = "") -> str:
    names = list(series)
    ymax = max([float(v) for vals in series.values() for v in vals] + [0.0]) or 1.0
    h = _scale(ymax)
    slot = (WIDTH - LEFT - RIGHT) / max(len(labels), 1)
    bar = slot * 0.8 / max(len(names), 1)
    base = HEIGHT - BOTTOM
    body = _axes(ymax, ylabel, xlabel)
    for i, label in enumerate(labels):
        for j, name in enumerate(names):
            v = float(series[name][i])
            x = LEFT + i * slot + slot * 0.1 + j * bar
            body.append(f'<rect x="{_num(x)}" y="{_num(base - h(v))}" width="{_num(bar)}" '
                        f'height="{_num(h(v))}" fill="{PALETTE[j % len(PALETTE)]}"/>')
        body.append(f'<text x="{_num(LEFT + (i + 0.5) * slot)}" y="{base + 16}" '
                    f'text-anchor="middle">{escape(str(label))}</text>')
    for j, name in enumerate(names):
        y = TOP + 14 * j
        body.append(f'<rect x="{WIDTH - 170}" y="{y}" width="10" height="10" '
                    f'fill="{PALETTE[j % len(PALETTE)]}"/>')
        body.append(f'<text x="{WIDTH - 155}" y="{y + 9}">{escape(name)}</text>')
    return _doc(title, body)


def histogram_chart(edges, counts, title: str, xlabel: str = "", ylabel: str = "count") -> str:
    ymax = float(max(list(counts) + [0])) or 1.0
    h = _scale(ymax)
    span_x = WIDTH - LEFT - RIGHT
    lo, hi = edges[0], edges[-1]
    px = lambda v: LEFT + span_x * (v - lo) / (hi - lo)  # noqa: E731
    base = HEIGHT - BOTTOM
    body = _axes(ymax, ylabel, xlabel)
    for i, c in enumerate(counts):
        x0, x1 = px(edges[i]), px(edges[i + 1])
        body.append(f'<rect x="{_num(x0)}" y="{_num(base - h(c))}" width="{_num(x1 - x0)}" '
                    f'height="{_num(h(c))}" fill="{PALETTE[0]}" stroke="white"/>')
    for e in edges:
        body.append(f'<text x="{_num(px(e))}" y="{base + 16}" text-anchor="middle">{_num(e)}</text>')
    return _doc(title, body)


def pie_chart(items, title: str) -> str:
    cx, cy, r = WIDTH / 2 - 80, HEIGHT / 2 + 15, 140
    body = []
    angle = -math.pi / 2
    for i, (label, share) in enumerate(items):
        color = PALETTE[i % len(PALETTE)]
        if share >= 1.0:
            body.append(f'<circle cx="{_num(cx)}" cy="{_num(cy)}" r="{r}" fill="{color}"/>')
        elif share > 0:
            end = angle + 2 * math.pi * share
            large = 1 if share > 0.5 else 0
            x0, y0 = cx + r * math.cos(angle), cy + r * math.sin(angle)
            x1, y1 = cx + r * math.cos(end), cy + r * math.sin(end)
            body.append(f'<path d="M {_num(cx)} {_num(cy)} L {_num(x0)} {_num(y0)} '
                        f'A {r} {r} 0 {large} 1 {_num(x1)} {_num(y1)} Z" fill="{color}" '
                        f'stroke="white"/>')
            angle = end
        y = TOP + 20 * i
        body.append(f'<rect x="{WIDTH - 200}" y="{y}" width="12" height="12" fill="{color}"/>')
        body.append(f'<text x="{WIDTH - 182}" y="{y + 11}">{escape(str(label))} '
                    f'({share * 100:.1f}%)</text>')
    return _doc(title, body)


def box_chart(stats, title: str, xlabel: str = "", ylabel: str = "") -> str:
    """``stats`` are objects with group_key, min, q1, median, q3, max."""
    ymax = max([s.max for s in stats] + [0.0]) or 1.0
    h = _scale(ymax)
    slot = (WIDTH - LEFT - RIGHT) / max(len(stats), 1)
    base = HEIGHT - BOTTOM
    body = _axes(ymax, ylabel, xlabel)
    for i, s in enumerate(stats):
        mid = LEFT + (i + 0.5) * slot
        half = slot * 0.25
        y = lambda v: base - h(v)  # noqa: E731
        body += [
            f'<line x1="{_num(mid)}" y1="{_num(y(s.min))}" x2="{_num(mid)}" y2="{_num(y(s.q1))}" stroke="black"/>',
            f'<line x1="{_num(mid)}" y1="{_num(y(s.q3))}" x2="{_num(mid)}" y2="{_num(y(s.max))}" stroke="black"/>',
            f'<rect x="{_num(mid - half)}" y="{_num(y(s.q3))}" width="{_num(2 * half)}" '
            f'height="{_num(h(s.q3 - s.q1))}" fill="{PALETTE[i % len(PALETTE)]}" stroke="black"/>',
            f'<line x1="{_num(mid - half)}" y1="{_num(y(s.median))}" x2="{_num(mid + half)}" '
            f'y2="{_num(y(s.median))}" stroke="black" stroke-width="2"/>',
            f'<text x="{_num(mid)}" y="{base + 16}" text-anchor="middle">{escape(s.group_key)}</text>',
        ]
    return _doc(title, body)


def heatmap(names, cells, title: str) -> str:
    n = len(names)
    size = min((WIDTH - 200) / max(n, 1), (HEIGHT - 120) / max(n, 1))
    x0, y0 = 160, 50
    body = []
    for i in range(n):
        body.append(f'<text x="{x0 - 6}" y="{_num(y0 + (i + 0.5) * size + 4)}" '
                    f'text-anchor="end">{escape(names[i])}</text>')
        body.append(f'<text x="{_num(x0 + (i + 0.5) * size)}" y="{_num(y0 + n * size + 16)}" '
                    f'text-anchor="middle">{escape(names[i])}</text>')
        for j in range(n):
            v = max(-1.0, min(1.0, float(cells[i][j])))
            # diverging blue (-1) / white (0) / red (+1)
            t = abs(v)
            shade = int(round(255 * (1 - t)))
            color = f"rgb(255,{shade},{shade})" if v >= 0 else f"rgb({shade},{shade},255)"
            body.append(f'<rect x="{_num(x0 + j * size)}" y="{_num(y0 + i * size)}" '
                        f'width="{_num(size)}" height="{_num(size)}" fill="{color}" stroke="white"/>')
            body.append(f'<text x="{_num(x0 + (j + 0.5) * size)}" y="{_num(y0 + (i + 0.5) * size + 4)}" '
                        f'text-anchor="middle">{v:.3f}</text>')
    return _doc(title, body)
