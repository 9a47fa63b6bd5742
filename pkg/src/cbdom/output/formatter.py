"""Result formatting: JSON records, CSV tables and plain-text terminal tables.

Floats are written with ``repr`` (shortest round-tripping form), keys are
sorted, nothing time-dependent is emitted: equal inputs give equal bytes.
"""

from __future__ import annotations

import csv
import io
import json as _json
import math
from pathlib import Path

import numpy as np


def _plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def to_json(data) -> str:
    """Serialize data to a JSON string."""
    return _json.dumps(_plain(data), indent=2, sort_keys=True) + "\n"


def format_cell(value) -> str:
    value = _plain(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_json(path: str | Path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(data), encoding="utf-8", newline="\n")
    return path


def to_csv(headers: list[str], rows: list[list]) -> str:
    """RFC 4180 text: header row, CRLF line ends, ``.`` decimal separator."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, headers: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(headers, rows))
    return path


def format_table(headers: list[str], rows: list[list],
                 budget: int = 0) -> str:
    if not rows:
        return "(none)"
    rows = [[format_cell(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            if i < len(widths):
                widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
             "  ".join("-" * w for w in widths)]
    display_rows = rows[:budget] if budget and len(rows) > budget else rows
    for row in display_rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    if budget and len(rows) > budget:
        lines.append(f"(+{len(rows) - budget} more)")
    return "\n".join(lines)


def section(title: str, lines: list[str]) -> str:
    return "\n".join([title] + lines)


def histogram_rows(bins: list[dict]) -> list[list]:
    """``residual_histogram`` output as ``[log10_bin, count]`` rows."""
    return [[b["log10_bin"], b["count"]] for b in bins]


def format_histogram(bins: list[dict], width: int = 40) -> str:
    if not bins:
        return "(empty)"
    top = max(b["count"] for b in bins)
    lines = []
    for b in bins:
        bar = "#" * max(1, round(width * b["count"] / top))
        lines.append(f"1e{b['log10_bin']:>4}  {b['count']:>7}  {bar}")
    return "\n".join(lines)
