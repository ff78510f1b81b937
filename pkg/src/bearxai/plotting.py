"""Deterministic SVG figures, written by hand.

Every number is printed with a fixed format so identical inputs give
identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 720
PANEL_H = 120
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 24, 36
METHOD_COLORS = {"random": "#555555", "cam-full": "#d62728", "cam-sub": "#1f77b4",
                 "baseline": "#2ca02c"}


def _f(v: float) -> str:
    return f"{v:.2f}"


def _heat_color(v: float) -> str:
    """Diverging blue-white-red for v in [-1, 1]."""
    v = float(np.clip(v, -1.0, 1.0))
    if v >= 0:
        r, g, b = 255, int(round(255 * (1 - v))), int(round(255 * (1 - v)))
    else:
        r, g, b = int(round(255 * (1 + v))), int(round(255 * (1 + v))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


class _Svg:
    def __init__(self, width: int, height: int):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="start", size=None, rotate=None):
        extra = f' font-size="{size}"' if size else ""
        if rotate is not None:
            extra += f' transform="rotate({rotate} {_f(x)} {_f(y)})"'
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>'
                 f"{escape(str(s))}</text>")

    def line(self, x0, y0, x1, y1, stroke="black", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}" '
                 f'stroke="{stroke}" stroke-width="{width}"{d}/>')

    def rect(self, x, y, w, h, fill, opacity=None):
        o = f' fill-opacity="{opacity}"' if opacity is not None else ""
        self.add(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                 f'fill="{fill}"{o}/>')

    def polyline(self, xs, ys, stroke, width=1.0):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.add(f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
                 f'stroke-width="{width}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


@dataclass
class Panel:
    title: str
    amplitudes: np.ndarray
    importance: np.ndarray | None = None  # same length as amplitudes


def spectrum_stack_svg(panels: list[Panel], order_min: float, order_max: float,
                       bands=(), fault_order: float | None = None, n_harmonics: int = 3) -> str:
    """Stacked spectra, each over a heat strip of its (signed) importance.

    ``bands`` are shaded green; dashed gridlines mark the fault order
    harmonics.
    """
    height = MARGIN_T + len(panels) * (PANEL_H + MARGIN_B) + 10
    svg = _Svg(WIDTH, height)
    plot_w = WIDTH - MARGIN_L - MARGIN_R

    def xpos(order):
        return MARGIN_L + (order - order_min) / (order_max - order_min) * plot_w

    for p_i, panel in enumerate(panels):
        top = MARGIN_T + p_i * (PANEL_H + MARGIN_B)
        amps = np.asarray(panel.amplitudes, dtype=np.float64)
        n = len(amps)
        bw = (order_max - order_min) / n
        if panel.importance is not None:
            imp = np.asarray(panel.importance, dtype=np.float64)
            scale = np.max(np.abs(imp)) or 1.0
            # merge runs of equal colour to keep the file small
            colors = [_heat_color(v / scale) for v in imp]
            start = 0
            for i in range(1, n + 1):
                if i == n or colors[i] != colors[start]:
                    x0 = xpos(order_min + start * bw)
                    svg.rect(x0, top, xpos(order_min + i * bw) - x0, PANEL_H, colors[start],
                             opacity=0.6)
                    start = i
        for lo, hi in bands:
            svg.rect(xpos(lo), top, xpos(hi) - xpos(lo), PANEL_H, "#2ca02c", opacity=0.35)
        if fault_order:
            for h in range(1, n_harmonics + 1):
                o = h * fault_order
                if order_min <= o <= order_max:
                    svg.line(xpos(o), top, xpos(o), top + PANEL_H, "#444444", 0.8, "4,3")
        peak = amps.max() or 1.0
        xs = [xpos(order_min + (i + 0.5) * bw) for i in range(n)]
        ys = [top + PANEL_H - a / peak * (PANEL_H - 4) for a in amps]
        svg.polyline(xs, ys, "black", 0.8)
        svg.add(f'<rect x="{_f(MARGIN_L)}" y="{_f(top)}" width="{_f(plot_w)}" '
                f'height="{PANEL_H}" fill="none" stroke="black"/>')
        svg.text(MARGIN_L, top - 6, panel.title)
        svg.text(MARGIN_L - 6, top + 10, f"{peak:.3g}", anchor="end", size=9)
        svg.text(MARGIN_L - 6, top + PANEL_H, "0", anchor="end", size=9)
        for tick in range(int(np.ceil(order_min)), int(np.floor(order_max)) + 1, 5):
            svg.line(xpos(tick), top + PANEL_H, xpos(tick), top + PANEL_H + 4)
            svg.text(xpos(tick), top + PANEL_H + 14, str(tick), anchor="middle", size=9)
    svg.text(WIDTH / 2, height - 4, "order", anchor="middle")
    return svg.render()


def removal_curve_svg(summaries, metric: str = "accuracy", baseline: float | None = None,
                      title: str = "") -> str:
    """Mean +/- std of ``metric`` vs removed fraction, one series per method.

    Series are nudged horizontally so their error bars do not overlap.
    """
    if metric not in ("accuracy", "loss"):
        raise ValueError(f"unknown metric {metric!r}")
    rows = [s for s in summaries if s.method != "baseline"]
    methods = sorted({s.method for s in rows}, key=lambda m: list(METHOD_COLORS).index(m)
                     if m in METHOD_COLORS else 99)
    mean = (lambda s: s.mean_accuracy) if metric == "accuracy" else (lambda s: s.mean_loss)
    std = (lambda s: s.std_accuracy) if metric == "accuracy" else (lambda s: s.std_loss)
    fr = sorted({s.fraction for s in rows})
    lo_vals = [mean(s) - std(s) for s in rows] + ([baseline] if baseline is not None else [])
    hi_vals = [mean(s) + std(s) for s in rows] + ([baseline] if baseline is not None else [])
    ymin, ymax = (min(lo_vals), max(hi_vals)) if rows else (0.0, 1.0)
    pad = 0.05 * (ymax - ymin or 1.0)
    ymin, ymax = ymin - pad, ymax + pad
    xmin, xmax = (min(fr), max(fr)) if fr else (0.0, 1.0)
    xspan = xmax - xmin or 1.0
    xmin, xmax = xmin - 0.05 * xspan, xmax + 0.05 * xspan
    H = 360
    svg = _Svg(WIDTH, H)
    pw, ph = WIDTH - MARGIN_L - 140, H - MARGIN_T - MARGIN_B - 10

    def X(v):
        return MARGIN_L + (v - xmin) / (xmax - xmin) * pw

    def Y(v):
        return MARGIN_T + (ymax - v) / (ymax - ymin) * ph

    svg.add(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" '
            f'stroke="black"/>')
    for f in fr:
        svg.line(X(f), MARGIN_T + ph, X(f), MARGIN_T + ph + 4)
        svg.text(X(f), MARGIN_T + ph + 16, f"{f:.2f}", anchor="middle", size=9)
    for k in range(5):
        v = ymin + (ymax - ymin) * k / 4
        svg.line(MARGIN_L - 4, Y(v), MARGIN_L, Y(v))
        svg.text(MARGIN_L - 6, Y(v) + 3, f"{v:.3f}", anchor="end", size=9)
    if baseline is not None:
        svg.line(MARGIN_L, Y(baseline), MARGIN_L + pw, Y(baseline), METHOD_COLORS["baseline"],
                 1.0, "6,3")
    offset = 0.012 * xspan
    for m_i, m in enumerate(methods):
        color = METHOD_COLORS.get(m, "#000000")
        dx = (m_i - (len(methods) - 1) / 2) * offset
        series = sorted((s for s in rows if s.method == m), key=lambda s: s.fraction)
        xs = [X(s.fraction + dx) for s in series]
        svg.polyline(xs, [Y(mean(s)) for s in series], color, 1.5)
        for s, x in zip(series, xs):
            svg.line(x, Y(mean(s) - std(s)), x, Y(mean(s) + std(s)), color, 1.2)
            svg.line(x - 3, Y(mean(s) - std(s)), x + 3, Y(mean(s) - std(s)), color, 1.2)
            svg.line(x - 3, Y(mean(s) + std(s)), x + 3, Y(mean(s) + std(s)), color, 1.2)
        ly = MARGIN_T + 14 + 16 * m_i
        svg.line(MARGIN_L + pw + 12, ly - 4, MARGIN_L + pw + 32, ly - 4, color, 2.0)
        svg.text(MARGIN_L + pw + 36, ly, m)
    if baseline is not None:
        ly = MARGIN_T + 14 + 16 * len(methods)
        svg.line(MARGIN_L + pw + 12, ly - 4, MARGIN_L + pw + 32, ly - 4,
                 METHOD_COLORS["baseline"], 1.0, "6,3")
        svg.text(MARGIN_L + pw + 36, ly, "original model")
    svg.text(MARGIN_L + pw / 2, H - 6, "fraction of training samples removed", anchor="middle")
    svg.text(14, MARGIN_T + ph / 2, f"test {metric}", anchor="middle", rotate=-90)
    if title:
        svg.text(MARGIN_L, MARGIN_T - 8, title)
    return svg.render()
