"""Bit-stable artifact emission: CSV tables, JSON summaries, standalone SVG.

Floats are written with repr (shortest round-trip form) in both CSV and JSON,
so every emitted number round-trips between the two at full precision.  The
SVG writer is self-contained (no external assets) and produces byte-identical
output for identical inputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .quasimetric import QuasiMetricSpace


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_node_id(node) -> str:
    if isinstance(node, tuple):
        return "_".join(str(c) for c in node)
    return str(node)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path | str, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def node_value_rows(space: QuasiMetricSpace, values: np.ndarray):
    """Rows `node,x,y,value`; missing coordinates are left blank."""
    rows = []
    for i, node in enumerate(space.node_ids):
        if space.coords is not None:
            c = space.coords[i]
            x = repr(float(c[0]))
            y = repr(float(c[1])) if c.shape[0] > 1 else ""
        else:
            x = y = ""
        rows.append((format_node_id(node), x, y, float(values[i])))
    return rows


# ---------------------------------------------------------------------------
# SVG plots
# ---------------------------------------------------------------------------

_PALETTE = ("#1f6fb2", "#c23b22", "#2e8b57", "#8a2be2", "#d2691e", "#2f4f4f")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(x: float) -> str:
    return f"{x:.6g}"


def emit_plot(series: Sequence[dict], style: dict | None = None) -> str:
    """Self-contained SVG with axes and one polyline per series.

    Each series is a dict with keys `name`, `x`, `y`.  Legend entries follow
    the input order.  A single data point degenerates to a marker.  Output is
    byte-stable for identical inputs.
    """
    if not series:
        raise InputError("series must be nonempty")
    style = dict(style or {})
    width = int(style.get("width", 640))
    height = int(style.get("height", 420))
    margin = int(style.get("margin", 54))
    title = str(style.get("title", ""))
    xlabel = str(style.get("xlabel", ""))
    ylabel = str(style.get("ylabel", ""))

    xs_all = np.concatenate([np.asarray(s["x"], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s["y"], dtype=float) for s in series])
    if xs_all.size == 0:
        raise InputError("series must contain at least one point")
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0

    px_w = width - 2 * margin
    px_h = height - 2 * margin

    def sx(x: float) -> float:
        return margin + (x - x_lo) / (x_hi - x_lo) * px_w

    def sy(y: float) -> float:
        return height - margin - (y - y_lo) / (y_hi - y_lo) * px_h

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{width // 2}" y="{margin // 2}" text-anchor="middle" '
            f'font-family="monospace" font-size="14">{_escape(title)}</text>'
        )
    # axes
    out.append(
        f'<line x1="{_fmt(margin)}" y1="{_fmt(height - margin)}" x2="{_fmt(width - margin)}" '
        f'y2="{_fmt(height - margin)}" stroke="black" stroke-width="1"/>'
    )
    out.append(
        f'<line x1="{_fmt(margin)}" y1="{_fmt(height - margin)}" x2="{_fmt(margin)}" '
        f'y2="{_fmt(margin)}" stroke="black" stroke-width="1"/>'
    )
    for k in range(5):
        xv = x_lo + k * (x_hi - x_lo) / 4
        yv = y_lo + k * (y_hi - y_lo) / 4
        xp, yp = sx(xv), sy(yv)
        out.append(
            f'<line x1="{_fmt(xp)}" y1="{_fmt(height - margin)}" x2="{_fmt(xp)}" '
            f'y2="{_fmt(height - margin + 5)}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(xp)}" y="{_fmt(height - margin + 18)}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{_tick_label(xv)}</text>'
        )
        out.append(
            f'<line x1="{_fmt(margin - 5)}" y1="{_fmt(yp)}" x2="{_fmt(margin)}" '
            f'y2="{_fmt(yp)}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(margin - 8)}" y="{_fmt(yp + 3)}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{_tick_label(yv)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" '
            f'font-family="monospace" font-size="12">{_escape(xlabel)}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="14" y="{height // 2}" text-anchor="middle" font-family="monospace" '
            f'font-size="12" transform="rotate(-90 14 {height // 2})">{_escape(ylabel)}</text>'
        )

    for si, s in enumerate(series):
        color = _PALETTE[si % len(_PALETTE)]
        xs = np.asarray(s["x"], dtype=float)
        ys = np.asarray(s["y"], dtype=float)
        if xs.size == 1:
            out.append(
                f'<circle cx="{_fmt(sx(xs[0]))}" cy="{_fmt(sy(ys[0]))}" r="3.5" fill="{color}"/>'
            )
        else:
            pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, ys))
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        ly = margin + 16 * si
        out.append(
            f'<line x1="{_fmt(width - margin - 110)}" y1="{_fmt(ly)}" '
            f'x2="{_fmt(width - margin - 90)}" y2="{_fmt(ly)}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{_fmt(width - margin - 84)}" y="{_fmt(ly + 4)}" font-family="monospace" '
            f'font-size="11">{_escape(str(s.get("name", f"series-{si}")))}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
