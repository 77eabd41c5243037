"""Deterministic report serialisation.

Floats are rendered with 17 significant digits everywhere, so identical
configurations produce bit-identical CSV and JSON files.  Every row carries
the configuration hash for provenance.
"""

from __future__ import annotations

import math
import os


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _json_scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isfinite(value):
            return fmt_float(value)
        return f'"{fmt_float(value)}"'
    if isinstance(value, str):
        out = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{out}"'
    raise TypeError(f"cannot serialise {type(value)!r}")


def to_json_text(obj, indent: int = 0) -> str:
    """JSON with fixed float formatting; dict keys keep insertion order."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f'{inner}{_json_scalar(str(k))}: {to_json_text(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{to_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    return _json_scalar(obj)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_float(value)
    if isinstance(value, int):
        return str(value)
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def write_csv(path: str, rows: list[dict], config_sha: str):
    """Write rows with a shared column set plus the config hash column."""
    if not rows:
        with open(path, "w") as fh:
            fh.write("config_sha\n")
        return
    columns = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(columns + ["config_sha"]) + "\n")
        for row in rows:
            cells = [_cell(row.get(c)) for c in columns]
            fh.write(",".join(cells + [config_sha]) + "\n")


def write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        fh.write(to_json_text(payload) + "\n")


def ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def format_table(rows: list[dict], columns: list[str] | None = None) -> str:
    """Plain-text summary table for the terminal."""
    if not rows:
        return "(no rows)"
    columns = columns or list(rows[0].keys())
    cells = [[_table_cell(r.get(c)) for c in columns] for r in rows]
    widths = [
        max(len(columns[i]), max(len(row[i]) for row in cells))
        for i in range(len(columns))
    ]
    lines = [
        "  ".join(c.ljust(w) for c, w in zip(columns, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def _table_cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
