"""Persistence: CSV series, JSON reports, field snapshots and SVG line plots.

Floats are written with 17 significant digits so a re-read reproduces the
stored doubles exactly, and every writer is deterministic so that reruns
produce byte-identical files.

Binary snapshot layout (little-endian throughout)::

    8 bytes   magic b"DNLSFLD1"
    8 bytes   uint64 record count n
    n * 24    records of three float64: x, Re u, Im u
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

FIELD_MAGIC = b"DNLSFLD1"
_RECORD = np.dtype([("x", "<f8"), ("re", "<f8"), ("im", "<f8")])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, rows: list[dict], columns: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Columns of a numeric CSV as float arrays (non-numeric columns stay strings)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) if v != "" else np.nan for v in col])
        except ValueError:
            out[name] = np.array(col, dtype=object)
    return out


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def read_json(path):
    return json.loads(Path(path).read_text())


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# --------------------------------------------------------------------------- fields


def write_field(path, x, u, binary: bool | None = None) -> Path:
    """Snapshot ``u`` on the points ``x``; binary when asked or when the suffix is ``.bin``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=complex)
    if x.shape != u.shape:
        raise ValueError("x and u must have the same length")
    binary = path.suffix == ".bin" if binary is None else binary
    if binary:
        rec = np.empty(x.size, dtype=_RECORD)
        rec["x"], rec["re"], rec["im"] = x, u.real, u.imag
        with path.open("wb") as fh:
            fh.write(FIELD_MAGIC)
            fh.write(np.uint64(x.size).astype("<u8").tobytes())
            fh.write(rec.tobytes())
    else:
        rows = [{"x": a, "re": b, "im": c} for a, b, c in zip(x, u.real, u.imag)]
        write_csv(path, rows, ["x", "re", "im"])
    return path


def read_field(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(8)
        if head == FIELD_MAGIC:
            n = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
            body = fh.read(n * _RECORD.itemsize)
            if len(body) != n * _RECORD.itemsize:
                raise ValueError(f"{path} is truncated: {len(body)} of "
                                 f"{n * _RECORD.itemsize} record bytes")
            rec = np.frombuffer(body, dtype=_RECORD)
            return rec["x"].copy(), rec["re"] + 1j * rec["im"]
    cols = read_csv(path)
    if not {"x", "re", "im"} <= set(cols):
        raise ValueError(f"{path} is not a field snapshot (need columns x, re, im)")
    return cols["x"], cols["re"] + 1j * cols["im"]


# --------------------------------------------------------------------------- plots

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        return [float(k) for k in range(a, b + 1)]
    span = hi - lo or 1.0
    step = 10 ** math.floor(math.log10(span / 5))
    for m in (1, 2, 5, 10):
        if span / (m * step) <= 6:
            step *= m
            break
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step) + 1)]


def line_plot_svg(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
                  logx: bool = False, logy: bool = False, width: int = 640,
                  height: int = 420) -> Path:
    """Minimal SVG line chart; ``series`` is a list of ``(x, y, label)``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clean = []
    for x, y, label in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        x, y = x[ok], y[ok]
        clean.append((np.log10(x) if logx else x, np.log10(y) if logy else y, label))
    xs = np.concatenate([c[0] for c in clean]) if clean else np.array([])
    ys = np.concatenate([c[1] for c in clean]) if clean else np.array([])
    if xs.size == 0:
        xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for tv in _ticks(x0, x1, logx):
        if x0 <= tv <= x1:
            lab = f"1e{int(tv)}" if logx else f"{tv:g}"
            out.append(f'<line x1="{px(tv):.2f}" y1="{mt + ph}" x2="{px(tv):.2f}" '
                       f'y2="{mt + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px(tv):.2f}" y="{mt + ph + 18}" text-anchor="middle">{lab}</text>')
    for tv in _ticks(y0, y1, logy):
        if y0 <= tv <= y1:
            lab = f"1e{int(tv)}" if logy else f"{tv:g}"
            out.append(f'<line x1="{ml - 5}" y1="{py(tv):.2f}" x2="{ml}" y2="{py(tv):.2f}" '
                       f'stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{py(tv) + 4:.2f}" text-anchor="end">{lab}</text>')
    for i, (x, y, label) in enumerate(clean):
        if x.size == 0:
            continue
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{ml + 10}" y="{mt + 16 + 14 * i}" fill="{color}">{escape(label)}</text>')
    out.append(f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
