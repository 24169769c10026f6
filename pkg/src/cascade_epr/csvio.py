"""Deterministic CSV emission for command results.

Header row of column names, comma separation, floats rendered in scientific
notation with a 12-digit mantissa (so a unit value prints as
``1.000000000000e+00``), preceded by a ``#``-prefixed metadata block echoing
the resolved configuration.  Output is byte-identical across runs and across
any parallelism level.
"""

from __future__ import annotations

import math

from .runner import TableResult

__all__ = ["format_value", "render_csv", "write_csv"]


def format_value(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        v = 0.0  # normalize negative zero
    return f"{v:.12e}"


def render_csv(table: TableResult) -> str:
    lines = [f"# {key} = {val}" for key, val in table.meta.items()]
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: str, table: TableResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_csv(table))
