"""Dependency-free SVG charts for sweep results.

Two small renderers cover the plots the sweeps are usually read through: a
throughput-vs-load line chart and a stacked per-component latency chart.
Both return the SVG document as a string and optionally write it to a file.
They draw with a fixed layout tuned for readability at default size, not a
general plotting system.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

_W, _H = 720, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 56

_COMPONENT_LABELS = (
    "src acc", "src intra", "src NIC", "inter",
    "dst NIC", "dst intra", "dst acc",
)
_COMPONENT_COLORS = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
    "#59a14f", "#edc948", "#b07aa1",
)
_LINE_COLORS = {
    "total": "#1f77b4",
    "intra": "#2ca02c",
    "inter": "#d62728",
    "offered": "#888888",
}


def _nice_ceiling(value: float) -> float:
    if value <= 0:
        return 1.0
    exp = math.floor(math.log10(value))
    frac = value / 10 ** exp
    for step in (1.0, 2.0, 2.5, 5.0, 10.0):
        if frac <= step:
            return step * 10 ** exp
    return 10.0 ** (exp + 1)


def _ticks(top: float, count: int = 5):
    return [top * i / count for i in range(count + 1)]


def _fmt(v: float) -> str:
    return ("%g" % round(v, 6))


class _Canvas:
    def __init__(self, title: str, x_label: str, y_label: str, y_top: float,
                 x_values: Sequence[float]):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
            f'height="{_H}" viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W / 2}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>',
        ]
        self.y_top = y_top
        self.x_min = min(x_values)
        self.x_max = max(x_values)
        if self.x_max == self.x_min:
            self.x_max = self.x_min + 1.0
        self._axes(x_label, y_label, x_values)

    def x(self, v: float) -> float:
        span = self.x_max - self.x_min
        return _ML + (v - self.x_min) / span * (_W - _ML - _MR)

    def y(self, v: float) -> float:
        return _H - _MB - v / self.y_top * (_H - _MT - _MB)

    def _axes(self, x_label: str, y_label: str, x_values) -> None:
        p = self.parts
        y0, y1 = _H - _MB, _MT
        p.append(f'<line x1="{_ML}" y1="{y0}" x2="{_W - _MR}" y2="{y0}" '
                 'stroke="black"/>')
        p.append(f'<line x1="{_ML}" y1="{y0}" x2="{_ML}" y2="{y1}" '
                 'stroke="black"/>')
        for tick in _ticks(self.y_top):
            ty = self.y(tick)
            p.append(f'<line x1="{_ML - 4}" y1="{ty:.1f}" x2="{_ML}" '
                     f'y2="{ty:.1f}" stroke="black"/>')
            p.append(f'<line x1="{_ML}" y1="{ty:.1f}" x2="{_W - _MR}" '
                     f'y2="{ty:.1f}" stroke="#dddddd"/>')
            p.append(f'<text x="{_ML - 8}" y="{ty + 4:.1f}" '
                     'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{_fmt(tick)}</text>')
        for xv in x_values:
            tx = self.x(xv)
            p.append(f'<line x1="{tx:.1f}" y1="{y0}" x2="{tx:.1f}" '
                     f'y2="{y0 + 4}" stroke="black"/>')
            p.append(f'<text x="{tx:.1f}" y="{y0 + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{_fmt(xv)}</text>')
        p.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 14}" '
                 'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">{x_label}</text>')
        p.append(f'<text x="16" y="{(_MT + _H - _MB) / 2}" '
                 'text-anchor="middle" font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2})">'
                 f'{y_label}</text>')

    def legend(self, entries) -> None:
        lx, ly = _ML + 12, _MT + 8
        for i, (label, color) in enumerate(entries):
            yy = ly + i * 16
            self.parts.append(f'<rect x="{lx}" y="{yy}" width="12" '
                              f'height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{lx + 17}" y="{yy + 9}" '
                              'font-family="sans-serif" font-size="11">'
                              f'{label}</text>')

    def finish(self) -> str:
        return "\n".join(self.parts) + "\n</svg>\n"


def throughput_chart(results: Iterable, title: str = "Delivered throughput",
                     path: str | None = None) -> str:
    """Line chart of offered/total/intra/inter Gbps against load."""
    pts = sorted(results, key=lambda r: r.load)
    if not pts:
        raise ValueError("no sweep results to chart")
    loads = [r.load * 100.0 for r in pts]
    series = {
        "offered": [r.offered_gbps for r in pts],
        "total": [r.total_gbps for r in pts],
        "intra": [r.intra_gbps for r in pts],
        "inter": [r.inter_gbps for r in pts],
    }
    top = _nice_ceiling(max(max(vals) for vals in series.values()))
    cv = _Canvas(title, "offered load (%)", "throughput (Gbps)", top, loads)
    for name, vals in series.items():
        color = _LINE_COLORS[name]
        coords = " ".join(f"{cv.x(x):.1f},{cv.y(v):.1f}"
                          for x, v in zip(loads, vals))
        dash = ' stroke-dasharray="6 4"' if name == "offered" else ""
        cv.parts.append(f'<polyline points="{coords}" fill="none" '
                        f'stroke="{color}" stroke-width="2"{dash}/>')
        if name != "offered":
            for x, v in zip(loads, vals):
                cv.parts.append(f'<circle cx="{cv.x(x):.1f}" '
                                f'cy="{cv.y(v):.1f}" r="3" fill="{color}"/>')
    cv.legend([(n, _LINE_COLORS[n]) for n in series])
    out = cv.finish()
    if path:
        with open(path, "w") as fh:
            fh.write(out)
    return out


def latency_chart(results: Iterable, title: str = "Latency decomposition",
                  path: str | None = None) -> str:
    """Stacked mean per-component latency bars, one bar per load point."""
    pts = sorted(results, key=lambda r: r.load)
    if not pts:
        raise ValueError("no sweep results to chart")
    loads = [r.load * 100.0 for r in pts]
    totals = [sum(r.mean_ns) for r in pts]
    top = _nice_ceiling(max(totals) or 1.0)
    cv = _Canvas(title, "offered load (%)", "mean latency (ns)", top, loads)
    width = max(6.0, (_W - _ML - _MR) / max(len(pts) * 2, 1))
    for r, xv in zip(pts, loads):
        base = cv.y(0.0)
        cx = cv.x(xv)
        for comp, color in zip(r.mean_ns, _COMPONENT_COLORS):
            if comp <= 0:
                continue
            h = cv.y(0.0) - cv.y(comp)
            cv.parts.append(f'<rect x="{cx - width / 2:.1f}" '
                            f'y="{base - h:.1f}" width="{width:.1f}" '
                            f'height="{h:.1f}" fill="{color}"/>')
            base -= h
    cv.legend(list(zip(_COMPONENT_LABELS, _COMPONENT_COLORS)))
    out = cv.finish()
    if path:
        with open(path, "w") as fh:
            fh.write(out)
    return out
