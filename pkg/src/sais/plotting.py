"""Log-log SVG plots of benchmark summaries, written without any plotting
dependency: one polyline per method over decade-gridded axes.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from .bench import SummaryRow

__all__ = ["PLOT_KINDS", "render_plot"]

PLOT_KINDS = ("mse-vs-budget", "mse-vs-ops")

_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 160, 40, 55

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f"]

_X_LABEL = {"mse-vs-budget": "budget (target evaluations)",
            "mse-vs-ops": "median operation count"}


def _series(rows: Sequence[SummaryRow],
            kind: str) -> Dict[str, List[Tuple[float, float]]]:
    series: Dict[str, List[Tuple[float, float]]] = {}
    for row in rows:
        x = float(row.budget if kind == "mse-vs-budget"
                  else row.median_op_count)
        y = row.median_log10_sq_error
        if x <= 0 or not math.isfinite(y):
            continue
        series.setdefault(row.method, []).append((math.log10(x), y))
    for pts in series.values():
        pts.sort()
    return {k: v for k, v in series.items() if v}


def _ticks(lo: float, hi: float) -> List[int]:
    return list(range(math.ceil(lo), math.floor(hi) + 1))


def render_plot(rows: Sequence[SummaryRow], kind: str, out_path: str) -> None:
    """Write a log-log summary plot (median squared error against budget or
    operation count) as a standalone SVG file."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    series = _series(rows, kind)
    if not series:
        raise ValueError("no plottable summary rows (all empty or non-finite)")

    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs) - 0.08, max(xs) + 0.08
    y_lo, y_hi = min(ys) - 0.25, max(ys) + 0.25
    if x_hi - x_lo < 0.5:
        pad = (0.5 - (x_hi - x_lo)) / 2
        x_lo, x_hi = x_lo - pad, x_hi + pad
    if y_hi - y_lo < 1.0:
        pad = (1.0 - (y_hi - y_lo)) / 2
        y_lo, y_hi = y_lo - pad, y_hi + pad

    inner_w = _WIDTH - _MARGIN_L - _MARGIN_R
    inner_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * inner_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * inner_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    # decade grid + tick labels
    for tx in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{px(tx):.1f}" y1="{_MARGIN_T}" '
                     f'x2="{px(tx):.1f}" y2="{_MARGIN_T + inner_h}" '
                     'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{px(tx):.1f}" y="{_MARGIN_T + inner_h + 18}" '
                     'font-size="12" text-anchor="middle" '
                     f'font-family="sans-serif">1e{tx}</text>')
    for ty in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{_MARGIN_L}" y1="{py(ty):.1f}" '
                     f'x2="{_MARGIN_L + inner_w}" y2="{py(ty):.1f}" '
                     'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{py(ty):.1f}" '
                     'font-size="12" text-anchor="end" dy="4" '
                     f'font-family="sans-serif">1e{ty}</text>')
    # axes
    parts.append(f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T + inner_h}" '
                 f'x2="{_MARGIN_L + inner_w}" y2="{_MARGIN_T + inner_h}" '
                 'stroke="black" stroke-width="1.5"/>')
    parts.append(f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" '
                 f'x2="{_MARGIN_L}" y2="{_MARGIN_T + inner_h}" '
                 'stroke="black" stroke-width="1.5"/>')
    # axis labels
    parts.append(f'<text x="{_MARGIN_L + inner_w / 2:.0f}" '
                 f'y="{_HEIGHT - 12}" font-size="13" text-anchor="middle" '
                 f'font-family="sans-serif">{_X_LABEL[kind]}</text>')
    parts.append(f'<text x="18" y="{_MARGIN_T + inner_h / 2:.0f}" '
                 'font-size="13" text-anchor="middle" '
                 'font-family="sans-serif" transform="rotate(-90 18 '
                 f'{_MARGIN_T + inner_h / 2:.0f})">median squared error</text>')
    # one polyline (plus markers) per method
    for index, (method, pts) in enumerate(sorted(series.items())):
        color = _PALETTE[index % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" '
                         f'fill="{color}"/>')
        ly = _MARGIN_T + 14 + 20 * index
        lx = _MARGIN_L + inner_w + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 26}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly}" font-size="12" '
                     f'font-family="sans-serif">{method}</text>')
    parts.append("</svg>")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
