"""Dependency-free SVG plots with byte-stable output.

Trajectories are drawn as ``q`` against ``t`` with jumps as dashed
segments; parametrized curves get two stacked panels (``t_hat`` and
``q_hat`` against ``s``); a list of labelled items becomes an overlay with
a legend in the given order.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .curves import BVTrajectory, ParametrizedCurve, Trajectory

WIDTH, PANEL_H, MARGIN = 640, 320, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
MAX_POINTS = 2000


def _n(x: float) -> str:
    return f"{x:.2f}"


def _thin(x: np.ndarray, y: np.ndarray):
    if x.size <= MAX_POINTS:
        return x, y
    idx = np.unique(np.round(np.linspace(0, x.size - 1, MAX_POINTS)).astype(int))
    return x[idx], y[idx]


class _Panel:
    def __init__(self, top: float, xs, ys, xlabel: str, ylabel: str):
        xs = np.concatenate([np.ravel(x) for x in xs]) if xs else np.zeros(1)
        ys = np.concatenate([np.ravel(y) for y in ys]) if ys else np.zeros(1)
        self.x0, self.x1 = float(np.min(xs)), float(np.max(xs))
        self.y0, self.y1 = float(np.min(ys)), float(np.max(ys))
        if self.x1 - self.x0 < 1e-12:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 - self.y0 < 1e-12:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        pad = 0.04 * (self.y1 - self.y0)
        self.y0, self.y1 = self.y0 - pad, self.y1 + pad
        self.top = top
        self.xlabel, self.ylabel = xlabel, ylabel
        self.items: list[str] = []

    def px(self, x):
        return MARGIN + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        return self.top + PANEL_H - MARGIN - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (PANEL_H - 2 * MARGIN)

    def polyline(self, x, y, color: str, dashed: bool = False):
        x, y = _thin(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        pts = " ".join(f"{_n(a)},{_n(b)}" for a, b in zip(self.px(x), self.py(y)))
        dash = ' stroke-dasharray="5,4"' if dashed else ""
        self.items.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')

    def render(self) -> list[str]:
        left, right = MARGIN, WIDTH - MARGIN
        top, bottom = self.top + MARGIN, self.top + PANEL_H - MARGIN
        out = [f'<rect x="{left}" y="{_n(top)}" width="{right - left}" height="{_n(bottom - top)}" '
               'fill="none" stroke="#444"/>']
        for frac in (0.0, 0.5, 1.0):
            xv = self.x0 + frac * (self.x1 - self.x0)
            yv = self.y0 + frac * (self.y1 - self.y0)
            out.append(f'<text x="{_n(self.px(xv))}" y="{_n(bottom + 16)}" font-size="11" '
                       f'text-anchor="middle">{xv:.4g}</text>')
            out.append(f'<text x="{left - 6}" y="{_n(self.py(yv) + 4)}" font-size="11" '
                       f'text-anchor="end">{yv:.4g}</text>')
        out.append(f'<text x="{WIDTH // 2}" y="{_n(bottom + 32)}" font-size="12" text-anchor="middle">'
                   f'{self.xlabel}</text>')
        out.append(f'<text x="12" y="{_n((top + bottom) / 2)}" font-size="12" '
                   f'transform="rotate(-90 12 {_n((top + bottom) / 2)})" text-anchor="middle">{self.ylabel}</text>')
        return out + self.items


def _series(obj):
    """(continuous polylines, jump segments) of a trajectory-like object, per component."""
    if isinstance(obj, Trajectory):
        return [(obj.times, obj.states)], []
    if isinstance(obj, BVTrajectory):
        lines = [(p.times, p.states) for p in obj.pieces]
        jumps = []
        for j in obj.jumps:
            path = j.polyline()
            jumps.append((np.full(path.shape[0], j.t), path))
        return lines, jumps
    raise TypeError(f"cannot plot {type(obj).__name__}")


def _document(panels, legend=(), title: str = "") -> str:
    height = PANEL_H * len(panels)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
           f'viewBox="0 0 {WIDTH} {height}">',
           f'<rect width="{WIDTH}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="20" font-size="14" text-anchor="middle">{title}</text>')
    for panel in panels:
        out.extend(panel.render())
    for k, (label, color) in enumerate(legend):
        y = MARGIN + 14 * k + 6
        out.append(f'<line x1="{WIDTH - MARGIN - 110}" y1="{y}" x2="{WIDTH - MARGIN - 90}" y2="{y}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 86}" y="{y + 4}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(obj, title: str = "") -> str:
    """SVG text for a trajectory, BV trajectory, parametrized curve or a list of ``(label, item)``."""
    if isinstance(obj, ParametrizedCurve):
        top = _Panel(0, [obj.params], [obj.t_hat], "s", "t_hat")
        top.polyline(obj.params, obj.t_hat, COLORS[0])
        bottom = _Panel(PANEL_H, [obj.params], [obj.q_hat], "s", "q_hat")
        for i in range(obj.q_hat.shape[1]):
            bottom.polyline(obj.params, obj.q_hat[:, i], COLORS[(i + 1) % len(COLORS)])
        return _document([top, bottom], title=title)
    items = list(obj) if isinstance(obj, (list, tuple)) else [("", obj)]
    series = [(label, *_series(item)) for label, item in items]
    xs = [t for _, lines, jumps in series for t, _ in lines + jumps]
    ys = [q for _, lines, jumps in series for _, q in lines + jumps]
    panel = _Panel(0, xs, ys, "t", "q")
    legend = []
    for k, (label, lines, jumps) in enumerate(series):
        for comp in range(lines[0][1].shape[1]):
            color = COLORS[(k + comp) % len(COLORS)]
            for t, q in lines:
                panel.polyline(t, q[:, comp], color)
            for t, q in jumps:
                panel.polyline(t, q[:, comp], color, dashed=True)
        if label:
            legend.append((label, COLORS[k % len(COLORS)]))
    return _document([panel], legend, title)


def emit_plot(obj, path, title: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(obj, title))
    return path
