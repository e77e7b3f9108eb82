"""Write import results to disk: one file per table plus a manifest."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Optional

from .model import ImportResult, Table

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["dataset_id", "source", "fallback", "tables", "warnings"],
    "additionalProperties": False,
    "properties": {
        "dataset_id": {"type": ["integer", "null"], "minimum": 1},
        "source": {"enum": ["uci", "custom"]},
        "fallback": {"type": "boolean"},
        "tables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "rows", "cols", "nan_fraction", "delimiter", "origin_path"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "file": {"type": "string"},
                    "rows": {"type": "integer", "minimum": 0},
                    "cols": {"type": "integer", "minimum": 0},
                    "nan_fraction": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "delimiter": {"enum": ["comma", "semicolon", "tab", None]},
                    "origin_path": {"type": "string"},
                },
            },
        },
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def table_filename(name: str, fmt: str) -> str:
    """``dir/sub/x.csv`` -> ``dir__sub__x.csv.csv`` for csv output."""
    flat = "__".join(_UNSAFE.sub("_", part) for part in re.split(r"[/\\]+", name) if part)
    return f"{flat or 'table'}.{fmt}"


def write_table(table: Table, path: Path, fmt: str) -> None:
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(table.columns)
            w.writerows(table.rows)
    elif fmt == "json":
        cols = table.columns
        records = [dict(zip(cols, row)) for row in table.rows]
        path.write_text(json.dumps(records, ensure_ascii=False, indent=1), encoding="utf-8")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def write_result(result: ImportResult, out_dir: Path, fmt: str = "csv", dataset_id: Optional[int] = None) -> dict:
    """Write tables, ``manifest.json`` and, when used, ``fallback.json``. Returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    used = set()
    for name, table in result.tables.items():
        fname = table_filename(name, fmt)
        stem, n = fname, 1
        while fname in used:
            fname = f"{stem[: -len(fmt) - 1]}-{n}.{fmt}"
            n += 1
        used.add(fname)
        write_table(table, out_dir / fname, fmt)
        entries.append(
            {
                "name": name,
                "file": fname,
                "rows": table.n_rows,
                "cols": table.n_cols,
                "nan_fraction": table.score.nan_fraction if table.score else None,
                "delimiter": table.delimiter.label if table.delimiter else None,
                "origin_path": table.origin_path or name,
            }
        )
    if result.fallback is not None:
        (out_dir / "fallback.json").write_text(json.dumps(result.fallback, ensure_ascii=False, indent=1), encoding="utf-8")
    manifest = {
        "dataset_id": dataset_id,
        "source": result.source.value,
        "fallback": result.fallback is not None,
        "tables": entries,
        "warnings": list(result.warnings),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest
