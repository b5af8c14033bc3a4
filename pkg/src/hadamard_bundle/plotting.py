"""Standalone SVG convergence charts, one polyline per trace.

Hand-rolled rather than delegated to a plotting library so the output is
deterministic and structurally checkable: each trace contributes exactly
one ``<polyline>`` and one legend ``<text>`` entry.  The y axis is
log-scaled; gap values are clipped at 1e-16 so zero gaps stay plottable.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import EmptyTrace
from .trace import read_csv_columns

__all__ = ["render_svg", "GAP_FLOOR"]

GAP_FLOOR = 1e-16

_WIDTH, _HEIGHT = 720, 460
_ML, _MR, _MT, _MB = 70, 160, 20, 50
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _series(path, y_mode: str, x_mode: str, f_star: float):
    cols = read_csv_columns(path)
    if x_mode not in cols:
        raise EmptyTrace(f"{path} has no column {x_mode!r}")
    f_col = "f_best" if "f_best" in cols else "f_x"
    xs = cols[x_mode]
    if not xs:
        raise EmptyTrace(f"{path} has no data rows")
    if y_mode == "gap":
        ys = [max(v - f_star, GAP_FLOOR) for v in cols[f_col]]
    elif y_mode == "f":
        ys = list(cols[f_col])
    else:
        raise ValueError(f"unknown y mode {y_mode!r}")
    return [float(x) for x in xs], ys


def render_svg(traces, y: str, x: str, path, f_star: float = 0.0) -> None:
    """Write a log-y line chart of the given (label, csv_path) traces."""
    if not traces:
        raise EmptyTrace("no traces to plot")
    series = [(label, *_series(p, y, x, f_star)) for label, p in traces]

    x_min = min(min(xs) for _, xs, _ in series)
    x_max = max(max(xs) for _, xs, _ in series)
    y_min = min(min(ys) for _, _, ys in series)
    y_max = max(max(ys) for _, _, ys in series)
    if y == "gap" or y_min > 0:
        ly_min, ly_max = math.log10(max(y_min, GAP_FLOOR)), math.log10(max(y_max, GAP_FLOOR))
        logscale = True
    else:
        ly_min, ly_max = y_min, y_max
        logscale = False
    if x_max <= x_min:
        x_max = x_min + 1.0
    if ly_max <= ly_min:
        ly_max = ly_min + 1.0

    pw = _WIDTH - _ML - _MR
    ph = _HEIGHT - _MT - _MB

    def sx(v: float) -> float:
        return _ML + pw * (v - x_min) / (x_max - x_min)

    def sy(v: float) -> float:
        lv = math.log10(max(v, GAP_FLOOR)) if logscale else v
        return _MT + ph * (1.0 - (lv - ly_min) / (ly_max - ly_min))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>',
    ]

    # y ticks on powers of ten when log-scaled
    if logscale:
        lo, hi = math.floor(ly_min), math.ceil(ly_max)
        step = max(1, (hi - lo) // 8)
        for e in range(lo, hi + 1, step):
            yy = sy(10.0**e)
            parts.append(
                f'<line x1="{_ML - 4}" y1="{yy:.2f}" x2="{_ML}" y2="{yy:.2f}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_ML - 8}" y="{yy + 4:.2f}" font-size="11" text-anchor="end">1e{e}</text>'
            )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_min + frac * (x_max - x_min)
        xx = sx(xv)
        parts.append(
            f'<line x1="{xx:.2f}" y1="{_MT + ph}" x2="{xx:.2f}" y2="{_MT + ph + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{xx:.2f}" y="{_MT + ph + 18}" font-size="11" text-anchor="middle">{xv:.3g}</text>'
        )
    parts.append(
        f'<text x="{_ML + pw / 2:.2f}" y="{_HEIGHT - 12}" font-size="12" text-anchor="middle">{x}</text>'
    )
    parts.append(
        f'<text x="16" y="{_MT + ph / 2:.2f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MT + ph / 2:.2f})">{y}</text>'
    )

    for k, (label, xs, ys) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _MT + 16 + 18 * k
        lx = _ML + pw + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-size="12">{label}</text>')

    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
