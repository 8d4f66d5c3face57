"""Convergence chart as plain SVG: belief means on top, strategy parameters below."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, PANEL_HEIGHT = 720, 260
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 30, 40
MAX_POINTS = 1000

COLORS = {"belief": "#1f77b4", "theta1": "#2ca02c", "theta0": "#ff7f0e", "reference": "#d62728"}


def _downsample(x: np.ndarray, ys: list[np.ndarray]):
    if x.size <= MAX_POINTS:
        return x, ys
    idx = np.unique(np.linspace(0, x.size - 1, MAX_POINTS).astype(int))
    return x[idx], [y[idx] for y in ys]


class _Panel:
    def __init__(self, top: float, x_range, y_values):
        self.top = top
        self.x0, self.x1 = x_range
        finite = np.concatenate([np.asarray(v, dtype=float).ravel() for v in y_values])
        finite = finite[np.isfinite(finite)]
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        self.y0, self.y1 = lo - pad, hi + pad

    @property
    def inner(self):
        left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        top, bottom = self.top + MARGIN_TOP, self.top + PANEL_HEIGHT - MARGIN_BOTTOM
        return left, right, top, bottom

    def px(self, x):
        left, right, _, _ = self.inner
        span = self.x1 - self.x0 or 1.0
        return left + (np.asarray(x, dtype=float) - self.x0) / span * (right - left)

    def py(self, y):
        _, _, top, bottom = self.inner
        return bottom - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * (bottom - top)

    def frame(self, title: str, ylabel: str) -> list[str]:
        left, right, top, bottom = self.inner
        out = [
            f'<rect x="{left}" y="{top:.2f}" width="{right - left}" height="{bottom - top:.2f}" fill="none" stroke="#444" class="axes"/>',
            f'<text x="{left}" y="{top - 8:.2f}" font-size="13">{escape(title)}</text>',
            f'<text x="12" y="{(top + bottom) / 2:.2f}" font-size="11" transform="rotate(-90 12 {(top + bottom) / 2:.2f})">{escape(ylabel)}</text>',
        ]
        for v in (self.y0, (self.y0 + self.y1) / 2, self.y1):
            out.append(f'<text x="{left - 6}" y="{float(self.py(v)) + 4:.2f}" font-size="10" text-anchor="end">{v:.3g}</text>')
        for v in (self.x0, (self.x0 + self.x1) / 2, self.x1):
            out.append(f'<text x="{float(self.px(v)):.2f}" y="{bottom + 16:.2f}" font-size="10" text-anchor="middle">{v:.0f}</text>')
        out.append(f'<text x="{(left + right) / 2:.2f}" y="{bottom + 32:.2f}" font-size="11" text-anchor="middle">iteration t</text>')
        return out

    def line(self, x, y, color: str, label: str) -> str:
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(x), self.py(y)) if np.isfinite(b))
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5" class="series" data-label="{escape(label)}"/>'

    def reference(self, value: float, color: str, label: str) -> str:
        left, right, _, _ = self.inner
        y = float(self.py(value))
        return (
            f'<line x1="{left}" y1="{y:.2f}" x2="{right}" y2="{y:.2f}" stroke="{color}" '
            f'stroke-dasharray="6,4" class="reference" data-label="{escape(label)}" data-value="{value!r}"/>'
        )


def convergence_svg(trace, reference=None) -> str:
    """Two stacked line charts of a learner trace.

    ``reference`` is an Equilibrium (or None); its average belief mean and
    parameter averages are drawn as dashed horizontal lines.
    """
    t = trace.column("t")
    belief = trace.belief_means().mean(axis=1)
    th1, th0 = trace.column("theta1_avg"), trace.column("theta0_avg")
    x, (belief, th1, th0) = _downsample(t, [belief, th1, th0])
    xr = (float(t[0]), float(t[-1]))

    refs = None
    if reference is not None:
        refs = (float(np.mean(reference.means)), reference.theta1_avg, reference.theta0_avg)

    top = _Panel(0, xr, [belief] + ([[refs[0]]] if refs else []))
    bottom = _Panel(PANEL_HEIGHT, xr, [th1, th0] + ([[refs[1], refs[2]]] if refs else []))
    height = 2 * PANEL_HEIGHT
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    parts += top.frame("average holon belief E[omega]", "belief mean")
    parts.append(top.line(x, belief, COLORS["belief"], "belief_mean_avg"))
    parts += bottom.frame("average strategy parameters", "theta")
    parts.append(bottom.line(x, th1, COLORS["theta1"], "theta1_avg"))
    parts.append(bottom.line(x, th0, COLORS["theta0"], "theta0_avg"))
    if refs:
        parts.append(top.reference(refs[0], COLORS["reference"], "belief_mean_ref"))
        parts.append(bottom.reference(refs[1], COLORS["theta1"], "theta1_ref"))
        parts.append(bottom.reference(refs[2], COLORS["theta0"], "theta0_ref"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
