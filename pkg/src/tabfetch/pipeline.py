"""Locate tabular data inside an extracted dataset archive.

The search runs in a fixed order and stops at the first stage that yields
tables:

1. files whose extension marks them as tabular (``.csv``, ``.data``, ...);
2. nested archives, best-named first, each searched again from stage 1;
3. ``.txt`` files that parse cleanly as delimited text;
4. extension-free files, accepted only when strictly cleaner than stage 3;
5. folder-per-column layouts, and finally a JSON-able mirror of the tree.
"""

from __future__ import annotations

import base64
import logging
import posixpath
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from .archive import (
    ArchiveBudget,
    extract_archive,
    is_unsupported_archive_name,
    list_nested_archives,
)
from .errors import ArchiveError, PipelineFailure
from .model import CandidateScore, Delimiter, FileNode, FileTree, ImportResult, RaggedTable, Source, Table
from .sniffer import (
    compare_scores,
    decode_text,
    finalize_table,
    is_perfect,
    parse_delimited,
    score_table,
    sniff_text,
    unique_names,
)

log = logging.getLogger(__name__)

MiB = 1 << 20
DEFAULT_TABULAR_EXTENSIONS = frozenset({".data", ".csv", ".tsv", ".xlsx"})
FORCED_DELIMITERS = {".csv": Delimiter.COMMA, ".tsv": Delimiter.TAB}
JUNK_NAMES = frozenset({"__MACOSX", ".DS_Store", "Thumbs.db"})

XlsxDecoder = Callable[[bytes], Dict[str, List[List[str]]]]


def openpyxl_decoder() -> Optional[XlsxDecoder]:
    """Return an openpyxl-backed workbook decoder, or None when openpyxl is missing."""
    try:
        import openpyxl
    except ImportError:
        return None

    def decode(data: bytes) -> Dict[str, List[List[str]]]:
        import io

        wb = openpyxl.load_workbook(io.BytesIO(data), read_only=True, data_only=True)
        try:
            sheets = {}
            for ws in wb.worksheets:
                rows = [["" if v is None else str(v) for v in row] for row in ws.iter_rows(values_only=True)]
                sheets[ws.title] = [r for r in rows if any(c.strip() for c in r)]
            return sheets
        finally:
            wb.close()

    return decode


@dataclass(frozen=True)
class PipelineConfig:
    budget: ArchiveBudget = field(default_factory=ArchiveBudget)
    min_rows: int = 10
    min_cols: int = 2
    tabular_extensions: frozenset = DEFAULT_TABULAR_EXTENSIONS
    max_sniff_bytes: int = 64 * MiB
    xlsx_decoder: Optional[XlsxDecoder] = field(default_factory=openpyxl_decoder, compare=False)

    def __post_init__(self):
        exts = frozenset(e.lower() if e.startswith(".") else "." + e.lower() for e in self.tabular_extensions)
        if not exts:
            raise ValueError("tabular_extensions must not be empty")
        object.__setattr__(self, "tabular_extensions", exts)
        if self.min_rows < 1 or self.min_cols < 1:
            raise ValueError("min_rows and min_cols must be at least 1")


Candidate = Tuple[str, Table, CandidateScore]


def _is_junk(path: str) -> bool:
    parts = path.split("/")
    return any(p in JUNK_NAMES for p in parts) or parts[-1].startswith("._")


def extension(name: str) -> str:
    base = posixpath.basename(name).lstrip(".")
    return posixpath.splitext(base)[1].lower()


def _read_text(path: str, node: FileNode, cfg: PipelineConfig, warnings: List[str], *, quiet: bool) -> Optional[str]:
    if node.size > cfg.max_sniff_bytes:
        warnings.append(f"{path}: skipped, {node.size} bytes exceeds the {cfg.max_sniff_bytes}-byte sniffing limit")
        return None
    try:
        data = node.read()
    except OSError as exc:
        warnings.append(f"{path}: unreadable ({exc})")
        return None
    text = decode_text(data)
    if text is None and not quiet:
        warnings.append(f"{path}: binary content, skipped")
    return text


def _read_xlsx(path: str, node: FileNode, cfg: PipelineConfig, warnings: List[str]) -> Dict[str, Table]:
    if cfg.xlsx_decoder is None:
        warnings.append(f"{path}: no spreadsheet decoder available, skipped")
        return {}
    try:
        sheets = cfg.xlsx_decoder(node.read())
    except Exception as exc:  # decoder is pluggable; any failure degrades to a warning
        warnings.append(f"{path}: spreadsheet could not be decoded ({exc})")
        return {}
    out = {}
    for sheet, rows in sheets.items():
        if not rows:
            continue
        key = path if len(sheets) == 1 else f"{path}#{sheet}"
        t = RaggedTable(tuple(tuple(r) for r in rows), key, None)
        out[key] = finalize_table(t, key, score_table(t))
    return out


def collect_tabular_files(
    tree: FileTree, cfg: Optional[PipelineConfig] = None, warnings: Optional[List[str]] = None
) -> Dict[str, Table]:
    cfg = cfg or PipelineConfig()
    warnings = warnings if warnings is not None else []
    tables: Dict[str, Table] = {}
    for path, node in tree.files():
        ext = extension(path)
        if _is_junk(path) or ext not in cfg.tabular_extensions:
            continue
        if ext == ".xlsx":
            tables.update(_read_xlsx(path, node, cfg, warnings))
            continue
        text = _read_text(path, node, cfg, warnings, quiet=False)
        if text is None:
            continue
        parsed = parse_delimited(text, path, FORCED_DELIMITERS.get(ext))
        if parsed is None:
            warnings.append(f"{path}: no multi-column delimited layout found")
            continue
        tables[path] = finalize_table(parsed[0], path, parsed[1])
    return tables


def _sniff_candidates(tree: FileTree, accept: Callable[[str], bool], cfg: PipelineConfig, warnings: List[str]) -> List[Candidate]:
    out = []
    for path, node in tree.files():
        if _is_junk(path) or not accept(path):
            continue
        text = _read_text(path, node, cfg, warnings, quiet=True)
        if text is None:
            continue
        found = sniff_text(text, path)
        if found is not None:
            out.append((path, finalize_table(found[0], path, found[1]), found[1]))
    return out


def _select_txt(cands: List[Candidate]) -> Tuple[List[Candidate], Optional[CandidateScore], bool]:
    """Every perfect ``.txt`` candidate, else every candidate tied for the best score."""
    if not cands:
        return [], None, False
    perfect = [c for c in cands if is_perfect(c[2])]
    if perfect:
        return perfect, perfect[0][2], True
    ranked = sorted(cands, key=cmp_to_key(lambda a, b: compare_scores(a[2], b[2])))
    best = ranked[0][2]
    return [c for c in ranked if compare_scores(c[2], best) == 0], best, False


def import_txt_candidates(
    tree: FileTree, cfg: Optional[PipelineConfig] = None, warnings: Optional[List[str]] = None
) -> Dict[str, Table]:
    cfg = cfg or PipelineConfig()
    cands = _sniff_candidates(tree, lambda p: extension(p) == ".txt", cfg, warnings if warnings is not None else [])
    selected, _, _ = _select_txt(cands)
    return {name: table for name, table, _ in selected}


def _is_extensionless(path: str) -> bool:
    return extension(path) == ""


def accept_extensionless(scores: List[CandidateScore], best_txt: Optional[CandidateScore]) -> Optional[int]:
    """Index of the accepted extension-free candidate, or None.

    Candidates are visited in order; one is accepted only when its NaN fraction
    is strictly below every file tried before it (the ``.txt`` best included).
    The last acceptance is therefore the unique, earliest, cleanest file.
    """
    floor = best_txt.nan_fraction if best_txt is not None else None
    accepted = None
    for i, s in enumerate(scores):
        if floor is None or s.nan_fraction < floor:
            accepted = i
            floor = s.nan_fraction
    return accepted


def import_extensionless(
    tree: FileTree,
    best_txt: Optional[CandidateScore] = None,
    cfg: Optional[PipelineConfig] = None,
    warnings: Optional[List[str]] = None,
) -> Optional[Tuple[str, Table]]:
    cfg = cfg or PipelineConfig()
    cands = _sniff_candidates(tree, _is_extensionless, cfg, warnings if warnings is not None else [])
    idx = accept_extensionless([c[2] for c in cands], best_txt)
    if idx is None:
        return None
    return cands[idx][0], cands[idx][1]


def coerce_directory_to_table(directory: FileNode, name: Optional[str] = None) -> Optional[Table]:
    """Read a folder-per-column layout: each subdirectory is a column, each file one entry."""
    if not directory.is_dir:
        return None
    columns = [c for c in directory.children if c.is_dir and c.name not in JUNK_NAMES]
    if len(columns) < 2:
        return None
    entries = []
    for col in columns:
        if any(c.is_dir for c in col.children):
            return None
        entries.append([f for f in col.children if not _is_junk(f.name)])
    n = max(len(e) for e in entries)
    if n == 0:
        return None

    rows = []
    for i in range(n):
        names: List[str] = []
        cells = []
        for files in entries:
            if i < len(files):
                f = files[i]
                if f.name not in names:
                    names.append(f.name)
                cells.append(f.read().decode("utf-8", errors="replace").strip())
            else:
                cells.append("")
        rows.append(("|".join(names), *cells))
    header = tuple(unique_names(["entry"] + [c.name for c in columns]))
    label = name if name is not None else directory.name
    return Table(name=label, header=header, rows=tuple(rows), origin_path=label)


def tree_to_structure(tree: FileTree) -> dict:
    """Nested dict mirroring the tree; binary files become base64 marker objects."""

    def rec(node: FileNode) -> dict:
        out = {}
        for c in node.children:
            if c.is_dir:
                out[c.name] = rec(c)
                continue
            data = c.read()
            text = decode_text(data)
            # anything that does not round-trip as UTF-8 is kept byte-exact
            if text is None or "\ufffd" in text:
                out[c.name] = {"encoding": "base64", "bytes": base64.b64encode(data).decode("ascii")}
            else:
                out[c.name] = text
        return out

    return rec(tree.root)


class _Search:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.warnings: List[str] = []
        self.nested: List[Tuple[str, FileTree]] = []

    def run(self, tree: FileTree, depth: int, prefix: str) -> Dict[str, Table]:
        cfg, warnings = self.cfg, self.warnings
        for path, _ in tree.files():
            if is_unsupported_archive_name(path):
                warnings.append(f"{prefix}{path}: .Z (LZW) archives are not supported, skipped")

        tables = collect_tabular_files(tree, cfg, warnings)
        if tables:
            return _prefixed(tables, prefix)

        for path in list_nested_archives(tree):
            if _is_junk(path):
                continue
            try:
                node = tree.get(path)
                sub = extract_archive(node.read(), cfg.budget, name=node.name, depth=depth + 1)
            except (ArchiveError, OSError) as exc:
                warnings.append(f"{prefix}{path}: nested archive skipped ({exc})")
                continue
            self.nested.append((f"{prefix}{path}/", sub))
            found = self.run(sub, depth + 1, f"{prefix}{path}/")
            if found:
                return found

        txt_cands = _sniff_candidates(tree, lambda p: extension(p) == ".txt", cfg, warnings)
        selected, best, perfect = _select_txt(txt_cands)
        if perfect:
            return _prefixed({n: t for n, t, _ in selected}, prefix)
        ext = import_extensionless(tree, best, cfg, warnings)
        if ext is not None:
            return _prefixed({ext[0]: ext[1]}, prefix)
        return _prefixed({n: t for n, t, _ in selected}, prefix)

    def coerce(self, tree: FileTree) -> Dict[str, Table]:
        out: Dict[str, Table] = {}
        for prefix, t in [("", tree)] + self.nested:
            for path, node in t.directories():
                if path and _is_junk(path):
                    continue
                label = prefix + path if path else (prefix.rstrip("/") or t.name)
                table = coerce_directory_to_table(node, label)
                if table is not None:
                    out[label] = table
        return out


def _prefixed(tables: Mapping[str, Table], prefix: str) -> Dict[str, Table]:
    if not prefix:
        return dict(tables)
    out = {}
    for name, t in tables.items():
        key = prefix + name
        out[key] = Table(key, t.header, t.rows, prefix + t.origin_path, t.delimiter, t.score)
    return out


def import_tree(tree: FileTree, cfg: Optional[PipelineConfig] = None) -> ImportResult:
    """Run the whole search over ``tree``. Always returns tables or a fallback structure."""
    cfg = cfg or PipelineConfig()
    search = _Search(cfg)
    try:
        tables = search.run(tree, 0, "")
        if not tables:
            tables = search.coerce(tree)
        if tables:
            return ImportResult(Source.CUSTOM, tables, None, search.warnings)
        structure = tree_to_structure(tree)
    except OSError as exc:
        raise PipelineFailure(f"tree {tree.name!r} is unreadable: {exc}") from exc
    search.warnings.append("no tabular data found; returning fallback structure")
    log.info("fallback structure for %s", tree.name)
    return ImportResult(Source.CUSTOM, {}, structure, search.warnings)
