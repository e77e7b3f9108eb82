"""Deterministic fixture datasets for offline testing.

Each kind reproduces one layout seen in repository downloads. ``generate``
writes a zip and returns the ground truth the import pipeline is expected to
recover, derived from the generation parameters alone.
"""

from __future__ import annotations

import gzip
import io
import math
import random
import tarfile
import zipfile
from pathlib import Path
from typing import Dict, List, Tuple, Union

from .model import Delimiter

KINDS = (
    "plain_tabular",
    "txt_tables",
    "nested_archive",
    "folder_columns",
    "extensionless",
    "binary_only",
    "prose_decoy",
)
# the first five reproduce layouts seen in real repository archives; the rest probe fallbacks
FIELD_KINDS = KINDS[:5]

_FIXED_DATE = (2000, 1, 1, 0, 0, 0)
_WORDS = (
    "the data were collected from patients at several sites during routine visits and "
    "each record describes one measurement session attributes are described below "
    "missing values are marked with a question mark class labels appear in the last "
    "column please cite the original donors when using this collection results may vary"
).split()
_COLUMN_NAMES = ("positive", "negative", "neutral", "spam", "ham", "train", "test", "sports", "politics", "science")


def zip_bytes(files: Dict[str, bytes]) -> bytes:
    """Zip ``files`` with fixed timestamps and ordering, so equal input gives equal bytes."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for path in sorted(files):
            info = zipfile.ZipInfo(path, date_time=_FIXED_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, files[path])
    return buf.getvalue()


def targz_bytes(files: Dict[str, bytes]) -> bytes:
    raw = io.BytesIO()
    with tarfile.open(fileobj=raw, mode="w", format=tarfile.USTAR_FORMAT) as tf:
        for path in sorted(files):
            info = tarfile.TarInfo(path)
            info.size = len(files[path])
            info.mtime = 0
            info.mode = 0o644
            tf.addfile(info, io.BytesIO(files[path]))
    out = io.BytesIO()
    with gzip.GzipFile(fileobj=out, mode="wb", mtime=0, filename="") as gz:
        gz.write(raw.getvalue())
    return out.getvalue()


def _prose(rng: random.Random, n_lines: int, comma_counts: Tuple[int, ...] = (0,)) -> str:
    lines = []
    for i in range(n_lines):
        words = [rng.choice(_WORDS) for _ in range(rng.randint(6, 12))]
        commas = comma_counts[i % len(comma_counts)]
        for k in range(commas):
            pos = 1 + (k * (len(words) - 1)) // max(commas, 1)
            words[pos - 1] += ","
        lines.append(" ".join(words).capitalize() + ".")
    return "\n".join(lines) + "\n"


def _table_text(
    rng: random.Random, n_rows: int, n_cols: int, delimiter: Delimiter, *, header: bool = True, n_missing: int = 0
) -> str:
    """``n_rows`` body rows of numbers with exactly ``n_missing`` body cells replaced by ``?``."""
    body = [[f"{rng.uniform(0, 100):.2f}" for _ in range(n_cols)] for _ in range(n_rows)]
    for idx in rng.sample(range(n_rows * n_cols), n_missing):
        body[idx // n_cols][idx % n_cols] = "?"
    rows = ([[f"attr_{j}" for j in range(n_cols)]] if header else []) + body
    return "\n".join(delimiter.value.join(r) for r in rows) + "\n"


def _expected(rows: int, cols: int, delimiter: Delimiter) -> dict:
    return {"rows": rows, "cols": cols, "delimiter": delimiter.label}


def _plain_tabular(rng: random.Random, name: str):
    files = {f"{name}/{name}.names": _prose(rng, 8).encode()}
    tables = {}
    for suffix in ("train", "test"):
        r, c = rng.randint(12, 60), rng.randint(3, 7)
        path = f"{name}/{name}_{suffix}.csv"
        files[path] = _table_text(rng, r, c, Delimiter.COMMA).encode()
        tables[path] = _expected(r, c, Delimiter.COMMA)
    return files, tables, {}


def _txt_tables(rng: random.Random, name: str):
    d = rng.choice(list(Delimiter))
    r, c = rng.randint(12, 50), rng.randint(3, 6)
    path = f"{name}/measurements.txt"
    files = {
        path: _table_text(rng, r, c, d).encode(),
        f"{name}/README.txt": _prose(rng, 10).encode(),
        f"{name}/notes.txt": _prose(rng, 6, (0, 1, 0)).encode(),
    }
    return files, {path: _expected(r, c, d)}, {}


def _nested_archive(rng: random.Random, name: str, seed: int):
    good = rng.choice(("data", "dataset", "raw_data"))
    other = rng.choice(("supplementary", "figures", "documentation"))
    ext = ".zip" if seed % 2 == 0 else ".tar.gz"
    pack = zip_bytes if ext == ".zip" else targz_bytes

    inner, tables = {}, {}
    for k in range(rng.randint(1, 2)):
        r, c = rng.randint(10, 40), rng.randint(2, 6)
        p = f"{good}/part{k}.data"
        inner[p] = _table_text(rng, r, c, Delimiter.COMMA, header=False).encode()
        tables[f"{name}/{good}{ext}/{p}"] = _expected(r, c, Delimiter.COMMA)
    decoy = {"extra.csv": _table_text(rng, 5, 3, Delimiter.COMMA).encode()}
    files = {
        f"{name}/README.txt": _prose(rng, 5).encode(),
        f"{name}/{good}{ext}": pack(inner),
        f"{name}/{other}.zip": zip_bytes(decoy),
    }
    return files, tables, {"winner_archive": f"{name}/{good}{ext}"}


def _folder_columns(rng: random.Random, name: str):
    cols = sorted(rng.sample(_COLUMN_NAMES, 3))
    files = {f"{name}/README.txt": _prose(rng, 4).encode()}
    lengths = []
    for col in cols:
        n = rng.randint(3, 12)
        lengths.append(n)
        for i in range(n):
            text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(5, 30)))
            files[f"{name}/{col}/{i:04d}.txt"] = text.encode()
    tables = {name: {"rows": max(lengths), "cols": len(cols) + 1, "delimiter": None}}
    return files, tables, {"columns": ["entry"] + cols}


def _extensionless(rng: random.Random, name: str):
    d = rng.choice(list(Delimiter))
    r1, c1 = rng.randint(15, 50), rng.randint(3, 6)
    m1 = rng.randint(0, max(1, (r1 * c1) // 50))
    # the runner-up is strictly dirtier than the winner, counted over header plus body
    r2, c2 = rng.randint(8, 20), rng.randint(2, 5)
    rate1 = m1 / ((r1 + 1) * c1)
    m2 = min(r2 * c2, math.floor((rate1 + 0.05) * (r2 + 1) * c2) + 1)
    files = {
        f"{name}/{name}": _table_text(rng, r1, c1, d, n_missing=m1).encode(),
        f"{name}/sample": _table_text(rng, r2, c2, d, n_missing=m2).encode(),
        f"{name}/README": _prose(rng, 12).encode(),
        f"{name}/Index": "\n".join(f"{i:2d} Jan 1998   {rng.randint(100, 9999)} file{i}" for i in range(5)).encode(),
    }
    return files, {f"{name}/{name}": _expected(r1, c1, d)}, {}


def _binary_only(rng: random.Random, name: str):
    def blob(n: int) -> bytes:
        return b"\x00\x01" + bytes(rng.getrandbits(8) for _ in range(n))

    files = {
        f"{name}/signals.bin": blob(rng.randint(200, 800)),
        f"{name}/image.raw": blob(rng.randint(200, 800)),
        f"{name}/core": blob(rng.randint(50, 200)),
        f"{name}/extra/calibration.dat": blob(64),
    }
    return files, {}, {}


def _prose_decoy(rng: random.Random, name: str):
    r, c = rng.randint(15, 40), rng.randint(3, 6)
    n_missing = rng.randint(1, 3)
    files = {f"{name}/{name}.txt": _table_text(rng, r, c, Delimiter.COMMA, n_missing=n_missing).encode()}
    for doc in ("README", "description", "changes"):
        n = rng.randint(6, 14)
        # the first four lines carry 0..3 commas, so the comma parse is 4 cells wide and
        # misses at least 6 cells of at most 56: above 0.1, while the table stays below 0.07
        counts = tuple(rng.sample((0, 1, 2, 3), 4))
        files[f"{name}/{doc}.txt"] = _prose(rng, n, counts).encode()
    return files, {f"{name}/{name}.txt": _expected(r, c, Delimiter.COMMA)}, {}


def generate(kind: str, seed: int, out: Union[str, Path]) -> dict:
    """Write ``<out>/<kind>-<seed>.zip`` and return its ground truth."""
    if kind not in KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}; expected one of {', '.join(KINDS)}")
    rng = random.Random(f"{kind}:{seed}")
    name = f"{kind.split('_')[0]}{seed}"
    if kind == "plain_tabular":
        files, tables, extra = _plain_tabular(rng, name)
    elif kind == "txt_tables":
        files, tables, extra = _txt_tables(rng, name)
    elif kind == "nested_archive":
        files, tables, extra = _nested_archive(rng, name, seed)
    elif kind == "folder_columns":
        files, tables, extra = _folder_columns(rng, name)
    elif kind == "extensionless":
        files, tables, extra = _extensionless(rng, name)
    elif kind == "binary_only":
        files, tables, extra = _binary_only(rng, name)
    else:
        files, tables, extra = _prose_decoy(rng, name)

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    archive = out / f"{kind}-{seed}.zip"
    archive.write_bytes(zip_bytes(files))
    truth = {
        "kind": kind,
        "seed": seed,
        "archive": str(archive),
        "fallback": not tables,
        "tables": tables,
        "winners": sorted(tables),
    }
    truth.update(extra)
    return truth


def generate_all(out: Union[str, Path], seeds: range = range(10)) -> List[dict]:
    return [generate(kind, seed, out) for kind in KINDS for seed in seeds]
