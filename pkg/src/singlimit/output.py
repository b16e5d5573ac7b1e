"""On-disk result formats: CSV snapshots, manifests, sweep reports, SVG plots.

All floats are serialized with 17 significant digits so files round-trip
bit-exactly; files are written atomically (temp file + rename) with LF line
endings.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiments import ConvergenceReport
from .solver import Field, Grid1D

__all__ = [
    "write_snapshot",
    "read_snapshot",
    "write_manifest",
    "write_report",
    "write_profiles_svg",
]


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(field: Field, time: float, path: str | Path) -> None:
    """One row per grid node, header `x,value`; `time` is recorded by the
    caller's manifest, not in the file."""
    del time  # kept in the manifest only
    rows = ["x,value"]
    rows.extend(f"{_fmt(x)},{_fmt(v)}" for x, v in zip(field.grid.x, field.values))
    _atomic_write(path, "\n".join(rows) + "\n")


def read_snapshot(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "r", newline="") as handle:
        header = handle.readline().strip()
        if header != "x,value":
            raise ValueError(f"{path}: not a snapshot file (header {header!r})")
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1]


def read_snapshot_field(path: str | Path) -> Field:
    x, values = read_snapshot(path)
    return Field(values, Grid1D(float(x[0]), float(x[-1]), len(x)))


def write_manifest(entries: Sequence[tuple[float, str]], path: str | Path) -> None:
    rows = ["time,filename"]
    rows.extend(f"{_fmt(t)},{name}" for t, name in entries)
    _atomic_write(path, "\n".join(rows) + "\n")


def write_report(report: ConvergenceReport, path: str | Path) -> None:
    rows = ["epsilon,err_p,err_m,speed,limit_speed"]
    for eps, ep, em, sp in zip(report.epsilons, report.err_p, report.err_m, report.speeds):
        rows.append(",".join(_fmt(v) for v in (eps, ep, em, sp, report.limit_speed)))
    _atomic_write(path, "\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# plotting (convenience only)

_SVG_W, _SVG_H = 860, 520
_MARGIN = 60


def _px(x, lo, hi, size, invert=False):
    frac = (x - lo) / (hi - lo)
    if invert:
        frac = 1.0 - frac
    return _MARGIN + frac * (size - 2 * _MARGIN)


def write_profiles_svg(series: Iterable[tuple[float, Field]], path: str | Path,
                       title: str = "", y_range: tuple[float, float] | None = None) -> None:
    """One polyline per snapshot, labeled with its time."""
    series = list(series)
    if not series:
        raise ValueError("nothing to plot")
    grid = series[0][1].grid
    if y_range is None:
        lo = min(f.values.min() for _, f in series)
        hi = max(f.values.max() for _, f in series)
        pad = 0.05 * max(hi - lo, 1e-12)
        y_range = (lo - pad, hi + pad)
    ylo, yhi = y_range

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_SVG_W / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>'
        )
    # axes
    x0, x1 = _MARGIN, _SVG_W - _MARGIN
    y0, y1 = _SVG_H - _MARGIN, _MARGIN
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = grid.xmin + frac * (grid.xmax - grid.xmin)
        px = _px(xv, grid.xmin, grid.xmax, _SVG_W)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{xv:g}</text>'
        )
        yv = ylo + frac * (yhi - ylo)
        py = _px(yv, ylo, yhi, _SVG_H, invert=True)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{yv:.3g}</text>'
        )

    n = max(len(series) - 1, 1)
    for k, (t, f) in enumerate(series):
        shade = int(30 + 180 * (1 - k / n))
        color = f"rgb({shade},{shade},255)"
        pts = " ".join(
            f"{_px(x, grid.xmin, grid.xmax, _SVG_W):.2f},"
            f"{_px(v, ylo, yhi, _SVG_H, invert=True):.2f}"
            for x, v in zip(grid.x, f.values)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        ly = _MARGIN + 16 * (k + 1)
        parts.append(
            f'<text x="{x1 - 4}" y="{ly}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11" fill="{color}">t = {t:g}</text>'
        )
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")
