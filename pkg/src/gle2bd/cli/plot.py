"""Minimal deterministic SVG line plots."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError

__all__ = ["emit_plot"]

_COLORS = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_DASHES = ("", "6,3", "2,2", "8,3,2,3", "4,4", "1,3", "10,2")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_plot(curves: Sequence[Tuple[np.ndarray, np.ndarray]], labels: Sequence[str], path,
              title: str = "", xlabel: str = "t", ylabel: str = "",
              meta: Optional[dict] = None) -> Path:
    """Overlay ``(x, y)`` curves in one SVG file.

    Output is a pure function of the inputs (fixed number formatting, no
    timestamps), so identical calls give identical bytes.
    """
    if not curves:
        raise ValidationError("emit_plot needs at least one curve")
    if len(labels) != len(curves):
        raise ValidationError("one label per curve required")
    xs = [np.asarray(c[0], dtype=float) for c in curves]
    ys = [np.asarray(c[1], dtype=float) for c in curves]
    for x, y in zip(xs, ys):
        if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
            raise ValidationError("each curve needs matching 1-d x and y with >= 2 points")
    x0, x1 = min(x.min() for x in xs), max(x.max() for x in xs)
    y0 = min(float(np.nanmin(y)) for y in ys)
    y1 = max(float(np.nanmax(y)) for y in ys)
    if y1 - y0 < 1e-300:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if meta is not None:
        body = json.dumps(meta, sort_keys=True, default=str).replace("--", "- -")
        out.append(f"<!-- gle2bd meta: {body} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">')
    out.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for tx in _ticks(x0, x1):
        X = px(tx)
        out.append(f'<line x1="{X:.2f}" y1="{TOP + ph}" x2="{X:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{tx:g}</text>')
    for ty in _ticks(y0, y1):
        Y = py(ty)
        out.append(f'<line x1="{LEFT - 5}" y1="{Y:.2f}" x2="{LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{ty:.4g}</text>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{LEFT}" y1="{py(0):.2f}" x2="{LEFT + pw}" y2="{py(0):.2f}" '
                   'stroke="#999999" stroke-width="0.5"/>')
    for k, (x, y) in enumerate(zip(xs, ys)):
        ok = np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        dash = _DASHES[k % len(_DASHES)]
        style = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{_COLORS[k % len(_COLORS)]}" '
                   f'stroke-width="1.5"{style} points="{pts}"/>')
    for k, lab in enumerate(labels):
        ly = TOP + 15 + 18 * k
        dash = _DASHES[k % len(_DASHES)]
        style = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 40}" y2="{ly}" '
                   f'stroke="{_COLORS[k % len(_COLORS)]}" stroke-width="1.5"{style}/>')
        out.append(f'<text x="{LEFT + pw + 45}" y="{ly + 4}">{_esc(lab)}</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{TOP - 15}" text-anchor="middle" '
                   f'font-size="14">{_esc(title)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="15" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 15 {TOP + ph / 2:.1f})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
