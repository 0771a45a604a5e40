"""Deterministic artifact writers.

CSV files carry a fixed column order, 17-significant-digit decimal
floats and LF line endings so that reruns with identical configuration
and seed are byte-identical.  JSON summaries are sorted and indented.
"""

from __future__ import annotations

import json
from pathlib import Path

__all__ = ["format_value", "write_csv", "write_json"]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_json(path, data) -> None:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
