"""Deterministic report emission: JSON, CSV and plain tables.

Keys appear in fixed construction order, floats are written in Python's
shortest round-trip form, and nothing time- or host-dependent is emitted,
so identical invocations produce identical bytes and parsing the JSON and
re-serializing it is byte-identical.
"""

from __future__ import annotations

import csv
import io
import json


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=True) + "\n"


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def to_csv(header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def to_table(header: list[str], rows: list[list], title: str = "") -> str:
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [len(h) for h in header]
    for row in cells:
        for k, text in enumerate(row):
            widths[k] = max(widths[k], len(text))
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(t.ljust(w) for t, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
