"""Shared domain types. Nothing in this module touches the filesystem or network."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping, Optional, Sequence

from .errors import EmptyInput

MISSING_MARKERS = frozenset({"", "?", "na", "nan", "null"})


def is_missing(cell: str) -> bool:
    """True if a present cell counts as missing (NaN)."""
    return cell.strip().lower() in MISSING_MARKERS


class Delimiter(enum.Enum):
    COMMA = ","
    SEMICOLON = ";"
    TAB = "\t"

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Delimiter":
        return cls[label.upper()]


class Source(str, enum.Enum):
    UCI = "uci"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DatasetRef:
    id: int
    page_url: str
    download_url: Optional[str] = None
    cache_path: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.id, bool) or not isinstance(self.id, int) or self.id < 1:
            raise ValueError(f"dataset id must be a positive integer, got {self.id!r}")
        if self.download_url is not None and not self.download_url.lower().endswith(".zip"):
            raise ValueError(f"download url must point at a .zip archive: {self.download_url}")


class NodeKind(str, enum.Enum):
    DIRECTORY = "directory"
    FILE = "file"


@dataclass(frozen=True)
class FileNode:
    """One entry of a FileTree.

    File content is read on demand through ``loader`` so that trees backed by
    an extraction directory do not hold every file in memory.
    """

    name: str
    kind: NodeKind
    children: tuple[FileNode, ...] = ()
    size: int = 0
    loader: Optional[Callable[[], bytes]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if "/" in self.name or "\\" in self.name:
            raise ValueError(f"node name may not contain path separators: {self.name!r}")
        if self.kind is NodeKind.DIRECTORY:
            if self.loader is not None or self.size:
                raise ValueError(f"directory {self.name!r} cannot carry content")
            object.__setattr__(self, "children", tuple(sorted(self.children, key=lambda n: n.name)))
        else:
            if self.children:
                raise ValueError(f"file {self.name!r} cannot have children")
            if self.size < 0:
                raise ValueError("file size must be non-negative")

    @classmethod
    def file(cls, name: str, data: bytes) -> FileNode:
        return cls(name, NodeKind.FILE, size=len(data), loader=lambda: data)

    @classmethod
    def directory(cls, name: str, children: Sequence[FileNode] = ()) -> FileNode:
        return cls(name, NodeKind.DIRECTORY, children=tuple(children))

    @property
    def is_dir(self) -> bool:
        return self.kind is NodeKind.DIRECTORY

    def read(self) -> bytes:
        if self.is_dir:
            raise IsADirectoryError(self.name)
        if self.loader is None:
            return b""
        return self.loader()

    def child(self, name: str) -> Optional[FileNode]:
        for c in self.children:
            if c.name == name:
                return c
        return None


def _leaf_bytes(node: FileNode) -> int:
    if not node.is_dir:
        return node.size
    return sum(_leaf_bytes(c) for c in node.children)


@dataclass(frozen=True)
class FileTree:
    root: FileNode
    total_bytes: int = -1

    def __post_init__(self):
        if not self.root.is_dir:
            raise ValueError("tree root must be a directory")
        actual = _leaf_bytes(self.root)
        if self.total_bytes == -1:
            object.__setattr__(self, "total_bytes", actual)
        elif self.total_bytes != actual:
            raise ValueError(f"total_bytes {self.total_bytes} != sum of file sizes {actual}")

    @property
    def name(self) -> str:
        return self.root.name

    def walk(self) -> Iterator[tuple[str, FileNode]]:
        """Yield ``(path, node)`` for every node below the root, depth first, sorted by name."""

        def rec(prefix: str, node: FileNode):
            for c in node.children:
                path = f"{prefix}{c.name}"
                yield path, c
                if c.is_dir:
                    yield from rec(path + "/", c)

        yield from rec("", self.root)

    def files(self) -> Iterator[tuple[str, FileNode]]:
        return ((p, n) for p, n in self.walk() if not n.is_dir)

    def directories(self) -> Iterator[tuple[str, FileNode]]:
        yield "", self.root
        yield from ((p, n) for p, n in self.walk() if n.is_dir)

    def get(self, path: str) -> FileNode:
        node = self.root
        for part in [p for p in path.split("/") if p]:
            nxt = node.child(part) if node.is_dir else None
            if nxt is None:
                raise KeyError(path)
            node = nxt
        return node

    @property
    def n_files(self) -> int:
        return sum(1 for _ in self.files())


@dataclass(frozen=True)
class RaggedTable:
    rows: tuple[tuple[str, ...], ...]
    source_path: str = ""
    delimiter: Optional[Delimiter] = None

    def __post_init__(self):
        rows = tuple(tuple(str(c) for c in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)

    @property
    def widths(self) -> list[int]:
        return [len(r) for r in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True, order=False)
class CandidateScore:
    nan_fraction: float
    regularity: float
    n_cols: int
    n_rows: int

    def __post_init__(self):
        if self.n_rows <= 0:
            raise EmptyInput("a candidate score needs at least one row")
        if not 0.0 <= self.nan_fraction <= 1.0:
            raise ValueError(f"nan_fraction out of range: {self.nan_fraction}")
        if not 0.0 <= self.regularity <= 1.0:
            raise ValueError(f"regularity out of range: {self.regularity}")
        if self.n_cols < 0:
            raise ValueError("n_cols must be non-negative")

    def as_tuple(self) -> tuple[float, float, int, int]:
        return (self.nan_fraction, self.regularity, self.n_cols, self.n_rows)


@dataclass(frozen=True)
class Table:
    name: str
    header: Optional[tuple[str, ...]]
    rows: tuple[tuple[str, ...], ...]
    origin_path: str = ""
    delimiter: Optional[Delimiter] = None
    score: Optional[CandidateScore] = None

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.header is not None:
            object.__setattr__(self, "header", tuple(self.header))
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValueError(f"table {self.name!r} is not rectangular: widths {sorted(widths)}")
        if self.header is not None and rows and len(self.header) != len(rows[0]):
            raise ValueError(f"table {self.name!r}: header width {len(self.header)} != row width {len(rows[0])}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        if self.rows:
            return len(self.rows[0])
        return len(self.header) if self.header else 0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def columns(self) -> tuple[str, ...]:
        if self.header is not None:
            return self.header
        return tuple(f"col_{i}" for i in range(self.n_cols))


@dataclass(frozen=True)
class ImportResult:
    source: Source
    tables: Mapping[str, Table] = field(default_factory=dict)
    fallback: Optional[Any] = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source", Source(self.source))
        object.__setattr__(self, "tables", dict(self.tables))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        has_tables = bool(self.tables)
        has_fallback = self.fallback is not None
        if has_tables == has_fallback:
            raise ValueError("an import result carries either tables or a fallback structure, exactly one")
        if self.source is Source.UCI and has_fallback:
            raise ValueError("structured-API results never carry a fallback")

    @property
    def used_fallback(self) -> bool:
        return self.fallback is not None


@dataclass(frozen=True)
class ValidationReport:
    non_null: bool
    tables_non_empty: bool
    tables_meeting_size: tuple[str, ...]
    fallback: bool
    passed: bool
    warnings: tuple[str, ...] = ()

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


def validate_result(result: Optional[ImportResult], min_rows: int = 10, min_cols: int = 2) -> ValidationReport:
    """Check an import outcome against the automatable success criteria.

    Never raises; every finding ends up in the report.
    """
    if result is None:
        return ValidationReport(False, False, (), False, False, ("no result",))

    warnings: list[str] = []
    tables = dict(result.tables or {})
    fallback = result.fallback is not None
    non_empty = all(t.n_rows > 0 and t.n_cols > 0 for t in tables.values())
    for name, t in tables.items():
        if t.n_rows == 0 or t.n_cols == 0:
            warnings.append(f"{name}: empty table")
    meeting = tuple(name for name, t in tables.items() if t.n_rows >= min_rows and t.n_cols >= min_cols)
    for name, t in tables.items():
        if name not in meeting and t.n_rows and t.n_cols:
            warnings.append(f"{name}: below size threshold ({t.n_rows}x{t.n_cols} < {min_rows}x{min_cols})")
    if fallback:
        warnings.append("fallback structure, no tables")

    passed = fallback or (bool(tables) and non_empty and bool(meeting))
    return ValidationReport(True, non_empty, meeting, fallback, passed, tuple(warnings))
