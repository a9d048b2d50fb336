"""Artifact writers: JSON, CSV, binary PGM images and hand-written SVG line plots.

Everything is written deterministically (sorted keys, fixed float repr) so
identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path, rows, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns})
    path.write_text(buf.getvalue())
    return path


def write_pgm(path, field, lo=None, hi=None):
    """Binary P5 greyscale image of a lattice field; +y points up in the image."""
    a = np.asarray(field, dtype=float)
    lo = float(np.min(a)) if lo is None else lo
    hi = float(np.max(a)) if hi is None else hi
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.clip(np.rint((a - lo) * scale), 0, 255).astype(np.uint8)
    img = img.T[::-1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
    return path


def read_pgm(path):
    data = Path(path).read_bytes()
    # header is 4 whitespace-separated tokens followed by exactly one whitespace byte;
    # pixel bytes may themselves look like whitespace, so don't split the payload
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    img = np.frombuffer(data[pos + 1: pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return img[::-1].T


def label_image(domain, *sets):
    """Lattice field: 0 outside, 1 in the domain, 2, 3, ... for the given cell sets."""
    out = domain.mask.astype(float)
    for k, s in enumerate(sets):
        out[s] = k + 2
    return out


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def svg_line_plot(path, series, xlabel, ylabel, title="", hlines=(), width=640, height=420):
    """Minimal SVG line chart.

    series : list of (label, xs, ys); hlines : list of (label, y) reference lines.
    """
    ml, mr, mt, mb = 70, 150, 40, 50
    xs = [x for _, X, _ in series for x in X]
    ys = [y for _, _, Y in series for y in Y] + [y for _, y in hlines]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - ml - mr, height - mt - mb

    def X(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return mt + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.2f}" y1="{mt + ph}" x2="{X(t):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X(t):.2f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 5}" y1="{Y(t):.2f}" x2="{ml}" y2="{Y(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{Y(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>')
    legend = []
    for k, (label, y) in enumerate(hlines):
        c = _COLORS[(k + len(series)) % len(_COLORS)]
        out.append(f'<line x1="{ml}" y1="{Y(y):.2f}" x2="{ml + pw}" y2="{Y(y):.2f}" '
                   f'stroke="{c}" stroke-dasharray="6 4"/>')
        legend.append((label, c, True))
    for k, (label, xs_, ys_) in enumerate(series):
        c = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in zip(xs_, ys_))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="2"/>')
        for x, y in zip(xs_, ys_):
            out.append(f'<circle cx="{X(x):.2f}" cy="{Y(y):.2f}" r="3" fill="{c}"/>')
        legend.append((label, c, False))
    for k, (label, c, dashed) in enumerate(legend):
        ly = mt + 10 + 18 * k
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 35}" y2="{ly}" stroke="{c}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{ml + pw + 40}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
