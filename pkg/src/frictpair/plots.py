"""Self-contained SVG phase portraits.

Plots are derived artifacts: they read trajectories and never feed back into
numeric outputs. Styling is inline so each file stands alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .analysis import sliding_geometry
from .integrators import Trajectory

WIDTH, HEIGHT = 640, 480
MARGIN = 0.05  # fraction of the data range added on every side
MAX_POINTS = 4000  # per polyline, after decimation
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
REGION_COLORS = {1: "#1f77b4", -1: "#d62728", 0: "#000000"}  # Omega+, Omega-, S0


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def _decimate(n: int) -> np.ndarray:
    if n <= MAX_POINTS:
        return np.arange(n)
    idx = np.linspace(0, n - 1, MAX_POINTS).round().astype(int)
    return np.unique(idx)


@dataclass
class Panel:
    """One set of axes; series are drawn as polylines in data coordinates."""

    title: str
    xlabel: str
    ylabel: str
    series: list[tuple[np.ndarray, np.ndarray, str, str]] = field(default_factory=list)
    bands: list[tuple[float, float]] = field(default_factory=list)  # hatched x-ranges

    def add(self, x, y, color: str, label: str = ""):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if len(x):
            keep = _decimate(len(x))
            self.series.append((x[keep], y[keep], color, label))

    def limits(self) -> tuple[float, float, float, float]:
        xs = [s[0] for s in self.series] + [np.array(b) for b in self.bands]
        ys = [s[1] for s in self.series]
        x = np.concatenate(xs) if xs else np.zeros(1)
        y = np.concatenate(ys) if ys else np.zeros(1)
        out = []
        for v in (x, y):
            lo, hi = float(np.min(v)), float(np.max(v))
            span = hi - lo if hi > lo else max(abs(hi), 1.0)
            out += [lo - MARGIN * span, hi + MARGIN * span]
        return tuple(out)


def _panel_svg(panel: Panel, ox: float, oy: float, w: float, h: float, uid: str) -> list[str]:
    left, right, top, bottom = 70.0, 15.0, 30.0, 45.0
    px0, px1 = ox + left, ox + w - right
    py0, py1 = oy + top, oy + h - bottom
    x_lo, x_hi, y_lo, y_hi = panel.limits()

    def sx(v):
        return px0 + (v - x_lo) / (x_hi - x_lo) * (px1 - px0)

    def sy(v):
        return py1 - (v - y_lo) / (y_hi - y_lo) * (py1 - py0)

    out = [f'<text x="{(px0 + px1) / 2:.1f}" y="{oy + 18:.1f}" text-anchor="middle" '
           f'style="font:bold 13px sans-serif">{escape(panel.title)}</text>']
    clip = f"clip{uid}"
    out.append(f'<clipPath id="{clip}"><rect x="{px0:.1f}" y="{py0:.1f}" '
               f'width="{px1 - px0:.1f}" height="{py1 - py0:.1f}"/></clipPath>')
    for a, b in panel.bands:
        out.append(f'<rect x="{sx(a):.1f}" y="{py0:.1f}" width="{sx(b) - sx(a):.1f}" '
                   f'height="{py1 - py0:.1f}" style="fill:url(#hatch);stroke:none"/>')
    for t in nice_ticks(x_lo, x_hi):
        x = sx(t)
        out.append(f'<line x1="{x:.1f}" y1="{py1:.1f}" x2="{x:.1f}" y2="{py1 + 4:.1f}" style="stroke:#000"/>')
        out.append(f'<text x="{x:.1f}" y="{py1 + 16:.1f}" text-anchor="middle" '
                   f'style="font:10px sans-serif">{t:.3g}</text>')
    for t in nice_ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{px0 - 4:.1f}" y1="{y:.1f}" x2="{px0:.1f}" y2="{y:.1f}" style="stroke:#000"/>')
        out.append(f'<text x="{px0 - 6:.1f}" y="{y + 3:.1f}" text-anchor="end" '
                   f'style="font:10px sans-serif">{t:.3g}</text>')
    if x_lo < 0 < x_hi:
        out.append(f'<line x1="{sx(0):.1f}" y1="{py0:.1f}" x2="{sx(0):.1f}" y2="{py1:.1f}" '
                   f'style="stroke:#bbb;stroke-dasharray:3,3"/>')
    if y_lo < 0 < y_hi:
        out.append(f'<line x1="{px0:.1f}" y1="{sy(0):.1f}" x2="{px1:.1f}" y2="{sy(0):.1f}" '
                   f'style="stroke:#bbb;stroke-dasharray:3,3"/>')
    for x, y, color, _ in panel.series:
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" clip-path="url(#{clip})" '
                   f'style="fill:none;stroke:{color};stroke-width:1.2"/>')
    out.append(f'<rect x="{px0:.1f}" y="{py0:.1f}" width="{px1 - px0:.1f}" height="{py1 - py0:.1f}" '
               f'style="fill:none;stroke:#000"/>')
    out.append(f'<text x="{(px0 + px1) / 2:.1f}" y="{oy + h - 10:.1f}" text-anchor="middle" '
               f'style="font:12px sans-serif">{escape(panel.xlabel)}</text>')
    out.append(f'<text x="{ox + 14:.1f}" y="{(py0 + py1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 {ox + 14:.1f} {(py0 + py1) / 2:.1f})" '
               f'style="font:12px sans-serif">{escape(panel.ylabel)}</text>')
    labels = [(c, lab) for _, _, c, lab in panel.series if lab]
    seen = set()
    row = 0
    for color, lab in labels:
        if lab in seen:
            continue
        seen.add(lab)
        y = py0 + 14 + 14 * row
        out.append(f'<line x1="{px1 - 110:.1f}" y1="{y - 4:.1f}" x2="{px1 - 92:.1f}" y2="{y - 4:.1f}" '
                   f'style="stroke:{color};stroke-width:2"/>')
        out.append(f'<text x="{px1 - 88:.1f}" y="{y:.1f}" style="font:10px sans-serif">{escape(lab)}</text>')
        row += 1
    return out


def render(panels: list[Panel], width: int = WIDTH, height: int = HEIGHT) -> str:
    """Lay panels out side by side in one SVG document."""
    w = width * len(panels)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" '
        f'viewBox="0 0 {w} {height}">',
        '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" '
        'style="stroke:#999;stroke-width:1"/></pattern></defs>',
        f'<rect width="{w}" height="{height}" style="fill:#fff"/>',
    ]
    for k, panel in enumerate(panels):
        parts += _panel_svg(panel, k * width, 0, width, height, str(k))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def body_portraits(traj: Trajectory) -> str:
    """(x, xdot) of each body."""
    p1 = Panel("body 1", "x1 [m]", "v1 [m/s]")
    p1.add(traj.x1, traj.v1, PALETTE[0])
    p2 = Panel("body 2", "x2 [m]", "v2 [m/s]")
    p2.add(traj.x2, traj.v2, PALETTE[1])
    return render([p1, p2])


def relative_portrait(traj: Trajectory) -> str:
    """(z, zdot) of the relative motion."""
    panel = Panel("relative motion", "z = x1 - x2 [m]", "zdot [m/s]")
    panel.add(traj.z, traj.zdot, PALETTE[0])
    return render([panel])


def relative_overlay(series: list[tuple[str, np.ndarray, np.ndarray]]) -> str:
    """Several (z, zdot) curves on common axes, one colour per label."""
    panel = Panel("relative motion", "z = x1 - x2 [m]", "zdot [m/s]")
    for k, (label, z, zd) in enumerate(series):
        panel.add(z, zd, PALETTE[k % len(PALETTE)], label)
    return render([panel])


def switching_plane(traj: Trajectory) -> str:
    """Projection onto the switching plane: x1 against the mean velocity.

    Arcs are coloured by mode (slip+ blue, slip- red, stick black) and the
    sliding strip |x1| <= x_star is hatched.
    """
    x_star = sliding_geometry(traj.scenario.params).x_star
    panel = Panel("switching plane", "x1 [m]", "(v1 + v2)/2 [m/s]", bands=[(-x_star, x_star)])
    v = 0.5 * (traj.v1 + traj.v2)
    mode = traj.mode
    cuts = np.nonzero(np.diff(mode))[0] + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [len(mode)]))
    names = {1: "slip+ (Omega+)", -1: "slip- (Omega-)", 0: "stick (S0)"}
    for s, e in zip(starts, ends):
        code = int(mode[s])
        # overlap by one sample so consecutive arcs join up
        sl = slice(max(s - 1, 0), e)
        panel.add(traj.x1[sl], v[sl], REGION_COLORS[code], names[code])
    return render([panel])
