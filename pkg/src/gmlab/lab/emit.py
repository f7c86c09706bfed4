"""Deterministic result serialization.

Floats are written with 17 significant digits (round-trip exact for
IEEE doubles), JSON keys are sorted, and no timestamps or environment
details enter the output, so identical configs and seeds produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class Table:
    """A named rectangular result block."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"table {self.name!r}: row of width {len(row)}, "
                    f"expected {len(self.columns)}"
                )


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


def _json_cell(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        # round-trip through the fixed format so csv and json agree
        return float(FLOAT_FORMAT % value)
    return value


def write_csv(table: Table, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_cell(v) for v in row])


def emit_results(tables, out_dir: str, fmt: str, provenance: dict) -> list[str]:
    """Write all tables plus provenance under out_dir; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths: list[str] = []
    if fmt == "csv":
        for table in tables:
            path = os.path.join(out_dir, f"{table.name}.csv")
            write_csv(table, path)
            paths.append(path)
        path = os.path.join(out_dir, "provenance.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(provenance, fh, sort_keys=True, indent=2)
            fh.write("\n")
        paths.append(path)
        return paths
    if fmt == "json":
        payload = {
            "provenance": provenance,
            "tables": {
                table.name: {
                    "columns": list(table.columns),
                    "rows": [[_json_cell(v) for v in row] for row in table.rows],
                }
                for table in tables
            },
        }
        path = os.path.join(out_dir, "result.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        paths.append(path)
        return paths
    raise ValueError(f"unknown output format {fmt!r}")
