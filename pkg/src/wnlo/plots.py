"""Self-contained SVG line charts, assembled by hand.

Charts are deterministic byte-for-byte: fixed viewport, fixed formatting,
no timestamps. NaN values split a curve into separate polyline segments,
which the characteristic-fan charts use at periodic wraps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Curve", "line_chart", "chart_data_csv", "PALETTE"]

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
)

_W, _H = 720.0, 440.0
_ML, _MR, _MT, _MB = 64.0, 16.0, 30.0, 46.0


@dataclass
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: str = PALETTE[0]
    dash: str | None = None


def _bounds(values) -> tuple[float, float]:
    lo = float(np.nanmin(values))
    hi = float(np.nanmax(values))
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi - lo < 1e-300:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, count: int = 5):
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _fmt(v: float) -> str:
    out = f"{v:.4g}"
    return "0" if out == "-0" else out


def line_chart(path: str, curves, title: str = "", x_label: str = "",
               y_label: str = "") -> None:
    if not curves:
        raise ValueError("need at least one curve")
    all_x = np.concatenate([np.asarray(c.x, dtype=float) for c in curves])
    all_y = np.concatenate([np.asarray(c.y, dtype=float) for c in curves])
    if not np.any(np.isfinite(all_y)):
        raise ValueError("curves contain no finite values")
    x_lo, x_hi = _bounds(all_x[np.isfinite(all_x)])
    y_lo, y_hi = _bounds(all_y[np.isfinite(all_y)])

    def px(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(v):
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:g}" '
        f'height="{_H:g}" viewBox="0 0 {_W:g} {_H:g}">',
        f'<rect width="{_W:g}" height="{_H:g}" fill="white"/>',
    ]
    # axes box and ticks
    parts.append(
        f'<rect x="{_ML:g}" y="{_MT:g}" width="{_W - _ML - _MR:g}" '
        f'height="{_H - _MT - _MB:g}" fill="none" stroke="#333" '
        'stroke-width="1"/>'
    )
    for tv in _ticks(x_lo, x_hi):
        x = px(tv)
        parts.append(
            f'<line x1="{x:.2f}" y1="{_H - _MB:.2f}" x2="{x:.2f}" '
            f'y2="{_H - _MB + 5:.2f}" stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_H - _MB + 18:.2f}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">{_fmt(tv)}</text>'
        )
    for tv in _ticks(y_lo, y_hi):
        y = py(tv)
        parts.append(
            f'<line x1="{_ML - 5:.2f}" y1="{y:.2f}" x2="{_ML:.2f}" '
            f'y2="{y:.2f}" stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_ML - 8:.2f}" y="{y + 4:.2f}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{_fmt(tv)}</text>'
        )
    if title:
        parts.append(
            f'<text x="{_W / 2:.2f}" y="19" font-size="14" '
            f'font-family="sans-serif" text-anchor="middle">{title}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_W / 2:.2f}" y="{_H - 8:.2f}" font-size="12" '
            f'font-family="sans-serif" text-anchor="middle">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{_H / 2:.2f}" font-size="12" '
            f'font-family="sans-serif" text-anchor="middle" '
            f'transform="rotate(-90 14 {_H / 2:.2f})">{y_label}</text>'
        )

    for curve in curves:
        xs = np.asarray(curve.x, dtype=float)
        ys = np.asarray(curve.y, dtype=float)
        dash = f' stroke-dasharray="{curve.dash}"' if curve.dash else ""
        # break the polyline wherever either coordinate is non-finite
        ok = np.isfinite(xs) & np.isfinite(ys)
        start = None
        for i in range(xs.size + 1):
            if i < xs.size and ok[i]:
                if start is None:
                    start = i
                continue
            if start is not None and i - start >= 2:
                pts = " ".join(
                    f"{px(xs[j]):.2f},{py(ys[j]):.2f}" for j in range(start, i)
                )
                parts.append(
                    f'<polyline points="{pts}" fill="none" '
                    f'stroke="{curve.color}" stroke-width="1.5"{dash}/>'
                )
            start = None

    # legend, top right inside the frame
    lx = _W - _MR - 160.0
    ly = _MT + 14.0
    for i, curve in enumerate(c for c in curves if c.label):
        y = ly + 16.0 * i
        dash = f' stroke-dasharray="{curve.dash}"' if curve.dash else ""
        parts.append(
            f'<line x1="{lx:.2f}" y1="{y - 4:.2f}" x2="{lx + 24:.2f}" '
            f'y2="{y - 4:.2f}" stroke="{curve.color}" stroke-width="1.5"{dash}/>'
        )
        parts.append(
            f'<text x="{lx + 30:.2f}" y="{y:.2f}" font-size="11" '
            f'font-family="sans-serif">{curve.label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def chart_data_csv(path: str, curves) -> None:
    """The plotted numbers in long form: series,x,y."""
    with open(path, "w", newline="\n") as fh:
        fh.write("series,x,y\n")
        for curve in curves:
            xs = np.asarray(curve.x, dtype=float)
            ys = np.asarray(curve.y, dtype=float)
            for j in range(xs.size):
                fh.write("%s,%.17g,%.17g\n" % (curve.label, xs[j], ys[j]))
