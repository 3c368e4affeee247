"""Flat-file formats: field samples and pairs as CSV, scatter plots as SVG, reports as JSON."""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from . import __version__
from .fields import FieldSample
from .stats_core import DomainError, RngStream

__all__ = [
    "SAMPLE_HEADER",
    "PAIR_HEADER",
    "SVG_POINT_CAP",
    "format_float",
    "write_sample_csv",
    "read_sample_csv",
    "write_pairs_csv",
    "scatter_svg",
    "write_json",
]

SAMPLE_HEADER = ("n", "loc", "value")
PAIR_HEADER = ("u", "v")
SVG_POINT_CAP = 5000
# fixed stream for the SVG subsample so figures do not depend on the run seed
_SUBSAMPLE_SEED = 0x5C47


def format_float(v: float) -> str:
    """Locale-independent decimal with 17 significant digits (exact round trip)."""
    return format(float(v), ".17g")


def write_sample_csv(sample: FieldSample, path) -> int:
    """Write ``n,loc,value`` rows sorted by (n, loc); returns the row count."""
    order = sorted(range(len(sample.location_ids)), key=lambda j: sample.location_ids[j])
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SAMPLE_HEADER)
        for i in range(sample.n_time):
            for j in order:
                writer.writerow((i + 1, sample.location_ids[j], format_float(sample.values[i, j])))
                rows += 1
    return rows


def read_sample_csv(path, layer: str = "Y") -> FieldSample:
    """Load a ``n,loc,value`` file; every time index must carry every location once."""
    table: dict[tuple[int, str], float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SAMPLE_HEADER:
            raise DomainError(f"{path}: expected header {','.join(SAMPLE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DomainError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                n, loc, value = int(row[0]), row[1], float(row[2])
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
            if (n, loc) in table:
                raise DomainError(f"{path}:{lineno}: duplicate entry for n={n}, loc={loc}")
            table[(n, loc)] = value
    if not table:
        raise DomainError(f"{path}: no data rows")
    times = sorted({n for n, _ in table})
    locs = sorted({loc for _, loc in table})
    if times != list(range(1, len(times) + 1)):
        raise DomainError(f"{path}: time index must run 1..n without gaps")
    if len(table) != len(times) * len(locs):
        raise DomainError(f"{path}: some (n, loc) combinations are missing")
    values = np.array([[table[(n, loc)] for loc in locs] for n in times])
    return FieldSample(values, tuple(locs), layer=layer)


def write_pairs_csv(pairs, path) -> int:
    pairs = np.asarray(pairs, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PAIR_HEADER)
        for u, v in pairs:
            writer.writerow((format_float(u), format_float(v)))
    return len(pairs)


def _axis_range(values, unit: bool):
    if unit:
        return 0.0, 1.0
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def scatter_svg(pairs, title: str = "", unit_square: bool = True,
                point_cap: int = SVG_POINT_CAP, size: int = 480) -> str:
    """Self-contained SVG scatter plot of ``pairs``.

    More than ``point_cap`` points are thinned by a uniform subsample drawn
    from a fixed stream, so the output depends only on the pairs.  Raw
    (untransformed) values are drawn on log axes.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) == 0:
        raise DomainError("scatter_svg needs a non-empty (n, 2) array")
    if point_cap < 1:
        raise DomainError("point_cap must be positive")
    shown = pairs
    if len(pairs) > point_cap:
        gen = RngStream(_SUBSAMPLE_SEED).generator
        idx = np.sort(gen.choice(len(pairs), size=point_cap, replace=False))
        shown = pairs[idx]
    plot = shown if unit_square else np.log10(shown)
    xlo, xhi = _axis_range(plot[:, 0], unit_square)
    ylo, yhi = _axis_range(plot[:, 1], unit_square)

    margin = 40
    inner = size - 2 * margin
    px = margin + (plot[:, 0] - xlo) / (xhi - xlo) * inner
    py = size - margin - (plot[:, 1] - ylo) / (yhi - ylo) * inner
    xlabel, ylabel = ("u", "v") if unit_square else ("log10 first", "log10 second")

    def fmt(v):
        return f"{v:.2f}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- generator: pmax_fields {__version__} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{size / 2:.0f}" y="{margin - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{_escape(title)}</text>',
        f'<text x="{size / 2:.0f}" y="{size - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{size / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 12 {size / 2:.0f})">{ylabel}</text>',
        f'<text x="{margin}" y="{size - margin + 14}" font-family="sans-serif" '
        f'font-size="10">{xlo:.3g}</text>',
        f'<text x="{size - margin}" y="{size - margin + 14}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{xhi:.3g}</text>',
        f'<text x="{margin - 4}" y="{size - margin}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{ylo:.3g}</text>',
        f'<text x="{margin - 4}" y="{margin + 8}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{yhi:.3g}</text>',
        '<g fill="steelblue" fill-opacity="0.6">',
    ]
    lines += [f'<circle cx="{fmt(x)}" cy="{fmt(y)}" r="1.3"/>' for x, y in zip(px, py)]
    lines += ["</g>", "</svg>", ""]
    return "\n".join(lines)


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path=None) -> str:
    """Serialise with sorted keys; non-finite floats become ``null``."""
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
