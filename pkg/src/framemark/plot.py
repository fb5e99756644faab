"""Minimal SVG line charts (polyline + axes only) from benchmark CSV rows."""

from __future__ import annotations

import csv
import io
import math
from typing import Optional

from .video import atomic_write_bytes

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

_W, _H = 640, 420
_MARGIN = 60


def read_report_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def _finite(values):
    return [v for v in values if math.isfinite(v)]


def svg_line_chart(
    rows: list[dict],
    x_field: str = "parameter",
    y_field: str = "fnr",
    strategy: Optional[str] = None,
    perturbation: Optional[str] = None,
) -> str:
    """Render one polyline per (strategy, perturbation) series."""
    series: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for row in rows:
        if strategy and row["strategy"] != strategy:
            continue
        if perturbation and row["perturbation"] != perturbation:
            continue
        try:
            x, y = float(row[x_field]), float(row[y_field])
        except (KeyError, ValueError):
            continue
        series.setdefault((row["strategy"], row["perturbation"]), []).append((x, y))
    if not series:
        raise ValueError("no rows matched the requested filters/fields")

    xs = _finite([x for pts in series.values() for x, _ in pts])
    ys = _finite([y for pts in series.values() for _, y in pts])
    if not xs or not ys:
        raise ValueError("no finite data points to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x):
        return _MARGIN + (x - x_lo) / (x_hi - x_lo) * (_W - 2 * _MARGIN)

    def py(y):
        return _H - _MARGIN - (y - y_lo) / (y_hi - y_lo) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" '
        f'y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_H - _MARGIN}" stroke="black"/>',
        f'<text x="{_W // 2}" y="{_H - 15}" font-size="13" text-anchor="middle">{x_field}</text>',
        f'<text x="18" y="{_H // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {_H // 2})">{y_field}</text>',
        f'<text x="{_MARGIN}" y="{_H - _MARGIN + 18}" font-size="11">{x_lo:g}</text>',
        f'<text x="{_W - _MARGIN}" y="{_H - _MARGIN + 18}" font-size="11" '
        f'text-anchor="end">{x_hi:g}</text>',
        f'<text x="{_MARGIN - 6}" y="{_H - _MARGIN}" font-size="11" '
        f'text-anchor="end">{y_lo:g}</text>',
        f'<text x="{_MARGIN - 6}" y="{_MARGIN + 4}" font-size="11" '
        f'text-anchor="end">{y_hi:g}</text>',
    ]
    for idx, (key, pts) in enumerate(sorted(series.items())):
        pts = sorted((x, y) for x, y in pts if math.isfinite(x) and math.isfinite(y))
        if not pts:
            continue
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'
        )
        label_y = _MARGIN + 14 * (idx + 1)
        parts.append(
            f'<text x="{_W - _MARGIN + 4}" y="{label_y}" font-size="10" '
            f'fill="{color}">{key[0]}/{key[1]}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_chart(
    csv_text: str,
    out_path: str,
    x_field: str = "parameter",
    y_field: str = "fnr",
    strategy: Optional[str] = None,
    perturbation: Optional[str] = None,
) -> None:
    chart = svg_line_chart(read_report_csv(csv_text), x_field, y_field, strategy, perturbation)
    atomic_write_bytes(out_path, chart.encode())
