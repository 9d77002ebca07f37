"""Static SVG rendering of the scaling, sweep and phase-distribution CSVs.

Output is plain text built from the CSV values alone, so identical input gives
byte-identical SVG.
"""
from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path

from .errors import FormatError
from .metrics import PHASE_COLUMNS, SCALING_COLUMNS, SWEEP_COLUMNS

SCHEMAS = {"scaling": SCALING_COLUMNS, "sweep": SWEEP_COLUMNS, "phase": PHASE_COLUMNS}

WIDTH, HEIGHT = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 30, 60


def read_csv(path, kind: str) -> list[dict[str, float]]:
    """Rows of a csmag CSV as floats, after checking the header against ``kind``."""
    if kind not in SCHEMAS:
        raise FormatError(f"unknown plot kind {kind!r}; expected one of {sorted(SCHEMAS)}")
    expected = SCHEMAS[kind]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty file")
        for i, col in enumerate(expected):
            got = header[i] if i < len(header) else None
            if got != col:
                raise FormatError(f"{path}: column {i} should be {col!r}, found {got!r}")
        if len(header) != len(expected):
            raise FormatError(f"{path}: unexpected extra column {header[len(expected)]!r}")
        rows = []
        for line_no, raw in enumerate(reader, start=2):
            if len(raw) != len(expected):
                raise FormatError(f"{path}:{line_no}: expected {len(expected)} fields")
            try:
                rows.append({c: float(v) for c, v in zip(expected, raw)})
            except ValueError as exc:
                bad = next(c for c, v in zip(expected, raw) if not _is_float(v))
                raise FormatError(f"{path}:{line_no}: column {bad!r} is not numeric") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return rows


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


class _Axes:
    def __init__(self, xs, ys, logx: bool, logy: bool):
        self.logx, self.logy = logx, logy
        fx = [self._tx(x) for x in xs if not logx or x > 0]
        fy = [self._ty(y) for y in ys if not logy or y > 0]
        self.x0, self.x1 = _span(fx)
        self.y0, self.y1 = _span(fy)

    def _tx(self, x):
        return math.log10(x) if self.logx else x

    def _ty(self, y):
        return math.log10(y) if self.logy else y

    def ok(self, x, y) -> bool:
        return (not self.logx or x > 0) and (not self.logy or y > 0)

    def px(self, x) -> float:
        return LEFT + (self._tx(x) - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y) -> float:
        return HEIGHT - BOTTOM - (self._ty(y) - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)


def _span(vals):
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi == lo:
        return lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _n(v: float) -> str:
    return f"{v:.2f}"


def _frame(ax: _Axes, title: str, xlabel: str, ylabel: str) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{WIDTH - LEFT - RIGHT}" height="{HEIGHT - TOP - BOTTOM}" '
        'fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {HEIGHT / 2:.1f})">{ylabel}</text>',
    ]
    out += _ticks(ax, "x")
    out += _ticks(ax, "y")
    return out


def _ticks(ax: _Axes, which: str) -> list[str]:
    lo, hi = (ax.x0, ax.x1) if which == "x" else (ax.y0, ax.y1)
    is_log = ax.logx if which == "x" else ax.logy
    if is_log:
        vals = list(range(math.ceil(lo), math.floor(hi) + 1))
        labels = [f"1e{v}" for v in vals]
    else:
        step = _nice_step((hi - lo) / 5)
        start = math.ceil(lo / step)
        vals = [k * step for k in range(start, int(math.floor(hi / step)) + 1)]
        labels = [f"{v:g}" for v in vals]
    out = []
    for v, lab in zip(vals, labels):
        if which == "x":
            x = LEFT + (v - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
            y = HEIGHT - BOTTOM
            out.append(f'<line x1="{_n(x)}" y1="{y}" x2="{_n(x)}" y2="{y + 5}" stroke="black"/>')
            out.append(f'<text x="{_n(x)}" y="{y + 17}" text-anchor="middle">{lab}</text>')
        else:
            y = HEIGHT - BOTTOM - (v - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)
            out.append(f'<line x1="{LEFT - 5}" y1="{_n(y)}" x2="{LEFT}" y2="{_n(y)}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 8}" y="{_n(y + 4)}" text-anchor="end">{lab}</text>')
    return out


def _nice_step(raw: float) -> float:
    if raw <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _polyline(ax, xs, ys, stroke, width=1.5, dash=None) -> str:
    pts = " ".join(f"{_n(ax.px(x))},{_n(ax.py(y))}" for x, y in zip(xs, ys) if ax.ok(x, y))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>'


def _markers(ax, xs, ys, color, shape="circle") -> list[str]:
    out = []
    for x, y in zip(xs, ys):
        if not ax.ok(x, y):
            continue
        cx, cy = ax.px(x), ax.py(y)
        if shape == "circle":
            out.append(f'<circle cx="{_n(cx)}" cy="{_n(cy)}" r="3.5" fill="{color}"/>')
        else:
            out.append(
                f'<polygon points="{_n(cx)},{_n(cy - 5)} {_n(cx + 5)},{_n(cy)} {_n(cx)},{_n(cy + 5)} '
                f'{_n(cx - 5)},{_n(cy)}" fill="{color}"/>'
            )
    return out


def _legend(entries) -> list[str]:
    out = []
    for i, (label, color) in enumerate(entries):
        y = TOP + 15 + 15 * i
        out.append(f'<rect x="{WIDTH - RIGHT - 150}" y="{y - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{WIDTH - RIGHT - 135}" y="{y + 1}">{label}</text>')
    return out


def _render_scaling(rows) -> list[str]:
    t = [r["T"] for r in rows]
    p = [r["precision"] for r in rows]
    h = [r["heisenberg_ref"] for r in rows]
    s = [r["shotnoise_ref"] for r in rows]
    ax = _Axes(t * 3, p + h + s, True, True)
    out = _frame(ax, "Precision scaling", "T (total time resources)", "sigma_B^2 T")
    out.append(_polyline(ax, t, h, "black"))
    out.append(_polyline(ax, t, s, "red", dash="4 3"))
    out += _markers(ax, t, p, "blue")
    out += _legend([("CS", "blue"), ("1/T reference", "black"), ("1/sqrt(T) reference", "red")])
    return out


def _render_sweep(rows) -> list[str]:
    x = [r["inv_tau0"] for r in rows]
    cs = [r["delta_b_cs"] for r in rows]
    std = [r["delta_b_std"] for r in rows]
    ax = _Axes(x * 2, cs + std, True, True)
    out = _frame(ax, "Sensitivity vs dynamic range", "1/tau0", "delta B")
    out.append(_polyline(ax, x, std, "black", 1.0))
    out += _markers(ax, x, std, "black", "diamond")
    out.append(_polyline(ax, x, cs, "red", 1.0))
    out += _markers(ax, x, cs, "red")
    out += _legend([("standard", "black"), ("CS", "red")])
    return out


def _render_phase(rows) -> list[str]:
    levels = sorted({int(r["level"]) for r in rows})
    ax = _Axes([r["bin"] for r in rows], [r["normalized"] for r in rows] + [0.0], False, False)
    out = _frame(ax, "Recovered spectrum per level", "frequency bin", "normalized |f_est|")
    span = max(1, len(levels) - 1)
    for i, lvl in enumerate(levels):
        sel = [r for r in rows if int(r["level"]) == lvl]
        grey = int(200 - 200 * i / span)
        out.append(_polyline(ax, [r["bin"] for r in sel], [r["normalized"] for r in sel],
                             f"rgb({grey},{grey},{grey})", 1.0))
    return out


RENDERERS = {"scaling": _render_scaling, "sweep": _render_sweep, "phase": _render_phase}


def emit_svg(csv_path, kind: str, svg_path=None) -> str:
    """Render ``csv_path`` as an SVG of the given kind; returns the SVG's sha256."""
    rows = read_csv(csv_path, kind)
    body = RENDERERS[kind](rows)
    text = "\n".join(body + ["</svg>"]) + "\n"
    svg_path = Path(svg_path) if svg_path is not None else Path(csv_path).with_suffix(".svg")
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()
