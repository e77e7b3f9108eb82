"""Ragged delimited-text parsing, delimiter inference and candidate scoring."""

from __future__ import annotations

import csv
import re
from collections import Counter
from functools import cmp_to_key
from typing import Optional

from .errors import EmptyInput
from .model import CandidateScore, Delimiter, RaggedTable, Table, is_missing

HEAD_BYTES = 8192
BINARY_THRESHOLD = 0.2

_TEXT_CONTROL = frozenset(b"\t\n\r\f\b\x1b")
# printable ASCII, the common whitespace controls, and every byte that can occur in valid UTF-8
_TEXT_BYTES = frozenset(range(0x20, 0x7F)) | _TEXT_CONTROL | frozenset(range(0x80, 0xC0)) | frozenset(range(0xC2, 0xF5))

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?%?$")
_LINE_BREAK = re.compile(r"\r?\n")


def is_binary(head: bytes) -> bool:
    head = head[:HEAD_BYTES]
    if not head:
        return False
    if b"\x00" in head:
        return True
    bad = sum(1 for byte in head if byte not in _TEXT_BYTES)
    return bad / len(head) > BINARY_THRESHOLD


def decode_text(data: bytes) -> Optional[str]:
    """Lossy UTF-8 decode, or None when the bytes look binary."""
    if is_binary(data[:HEAD_BYTES]):
        return None
    text = data.decode("utf-8", errors="replace")
    if text and text.count("\ufffd") / len(text) > BINARY_THRESHOLD:
        return None
    return text.lstrip("\ufeff")


def _split_line(line: str, delimiter: str) -> list[str]:
    # one reader per line so an unbalanced quote cannot swallow the following rows
    return next(csv.reader([line.replace("\x00", "")], delimiter=delimiter, quotechar='"'))


def read_ragged_delimited(text: str, delimiter: Delimiter, source_path: str = "") -> RaggedTable:
    """Parse ``text`` into rows of cells without requiring equal row widths.

    Quoting follows the csv module's excel dialect, one record per physical line.
    Blank lines are skipped, so trailing newlines never produce phantom rows.
    """
    delimiter = Delimiter(delimiter)
    rows = tuple(
        tuple(cell.strip() for cell in _split_line(line, delimiter.value))
        for line in _LINE_BREAK.split(text)
        if line.strip()
    )
    return RaggedTable(rows, source_path, delimiter)


def modal_width(widths: list[int]) -> int:
    counts = Counter(widths)
    # ties resolve toward the wider row
    return max(counts, key=lambda w: (counts[w], w))


def score_table(t: RaggedTable) -> CandidateScore:
    if not t.rows:
        raise EmptyInput(f"cannot score an empty table ({t.source_path or 'no source'})")
    widths = t.widths
    n_rows = len(widths)
    width_max = max(widths)
    mode = modal_width(widths)
    total = n_rows * width_max
    if total == 0:
        return CandidateScore(1.0, 1.0, 0, n_rows)
    missing = sum(width_max - len(r) for r in t.rows)
    missing += sum(1 for r in t.rows for c in r if is_missing(c))
    regular = sum(1 for w in widths if w == mode)
    return CandidateScore(missing / total, regular / n_rows, mode, n_rows)


def compare_scores(a: CandidateScore, b: CandidateScore) -> int:
    """Return -1 if ``a`` is the better candidate, 1 if ``b`` is, 0 on an exact tie.

    Lower NaN fraction first, then higher regularity, wider modal row, more rows.
    Sorting with ``cmp_to_key(compare_scores)`` puts the best candidate first.
    """
    ka = (-a.nan_fraction, a.regularity, a.n_cols, a.n_rows)
    kb = (-b.nan_fraction, b.regularity, b.n_cols, b.n_rows)
    if ka == kb:
        return 0
    return -1 if ka > kb else 1


score_sort_key = cmp_to_key(compare_scores)


def is_perfect(s: CandidateScore) -> bool:
    return s.nan_fraction == 0 and s.regularity == 1 and s.n_cols >= 2 and s.n_rows >= 2


def sniff_all(text: str, path: str = "") -> list[tuple[Delimiter, RaggedTable, Optional[CandidateScore]]]:
    """Parse with every supported delimiter. The score is None for an empty parse."""
    out = []
    for d in Delimiter:
        t = read_ragged_delimited(text, d, path)
        out.append((d, t, score_table(t) if t.rows else None))
    return out


def sniff_text(text: str, path: str = "") -> Optional[tuple[RaggedTable, CandidateScore]]:
    """Best parse over comma, semicolon and tab, ignoring single-column parses."""
    best = None
    for _, t, s in sniff_all(text, path):
        if s is None or s.n_cols < 2:
            continue
        if best is None or compare_scores(s, best[1]) < 0:
            best = (t, s)
    return best


def parse_delimited(
    text: str, path: str = "", prefer: Optional[Delimiter] = None
) -> Optional[tuple[RaggedTable, CandidateScore]]:
    """Use ``prefer`` when it yields several columns, otherwise sniff."""
    if prefer is not None:
        t = read_ragged_delimited(text, prefer, path)
        if t.rows and modal_width(t.widths) >= 2:
            return t, score_table(t)
    return sniff_text(text, path)


def is_number(cell: str) -> bool:
    return bool(_NUMBER.match(cell.strip()))


def detect_header(t: RaggedTable) -> bool:
    if len(t.rows) < 2:
        return False
    if any(is_number(c) for c in t.rows[0]):
        return False
    return any(is_number(c) for row in t.rows[1:] for c in row)


def unique_names(names: list[str]) -> list[str]:
    seen: Counter = Counter()
    out = []
    for i, n in enumerate(names):
        n = n or f"col_{i}"
        if seen[n]:
            out.append(f"{n}.{seen[n]}")
        else:
            out.append(n)
        seen[n] += 1
    return out


def finalize_table(t: RaggedTable, name: Optional[str] = None, score: Optional[CandidateScore] = None) -> Table:
    """Pad rows to the widest row and split off a header when one is detected."""
    if not t.rows:
        raise EmptyInput(f"cannot finalize an empty table ({t.source_path or 'no source'})")
    width = max(len(r) for r in t.rows)
    padded = [tuple(r) + ("",) * (width - len(r)) for r in t.rows]
    header = None
    if detect_header(t):
        header = tuple(unique_names(list(padded[0])))
        padded = padded[1:]
    return Table(
        name=name if name is not None else t.source_path,
        header=header,
        rows=tuple(padded),
        origin_path=t.source_path,
        delimiter=t.delimiter,
        score=score,
    )
