"""Archive extraction into FileTrees and ranking of nested archives."""

from __future__ import annotations

import bz2
import gzip
import io
import os
import posixpath
import tarfile
import zipfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import BudgetExceeded, CorruptArchive, UnsupportedArchiveFormat
from .model import FileNode, FileTree, NodeKind

GiB = 1 << 30
CHUNK = 1 << 20

# longest first so ".tar.gz" is stripped before ".gz"
ARCHIVE_SUFFIXES = (".tar.gz", ".tar.bz2", ".tbz2", ".tgz", ".zip", ".tar", ".gz")
UNSUPPORTED_SUFFIXES = (".z",)


@dataclass(frozen=True)
class ArchiveBudget:
    max_extracted_bytes: int = GiB
    max_depth: int = 5
    max_files: int = 50_000

    def __post_init__(self):
        for name in ("max_extracted_bytes", "max_depth", "max_files"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs for insertion, deletion and substitution."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def is_archive_name(name: str) -> bool:
    return name.lower().endswith(ARCHIVE_SUFFIXES)


def is_unsupported_archive_name(name: str) -> bool:
    return name.lower().endswith(UNSUPPORTED_SUFFIXES)


def normalized_stem(name: str) -> str:
    """Lowercase basename with every archive suffix removed: ``Data.tar.gz`` -> ``data``."""
    stem = posixpath.basename(name.replace("\\", "/")).lower()
    stripped = True
    while stripped:
        stripped = False
        for suffix in ARCHIVE_SUFFIXES:
            if stem.endswith(suffix) and len(stem) > len(suffix):
                stem = stem[: -len(suffix)]
                stripped = True
                break
    return stem


def _rank_key(name: str) -> tuple[int, str]:
    return (edit_distance(normalized_stem(name), "data"), name)


def rank_archives(names: Iterable[str]) -> list[str]:
    """Order archive names by how close their stem is to "data"; ties go lexicographically."""
    return sorted(names, key=_rank_key)


def list_nested_archives(tree: FileTree) -> list[str]:
    return rank_archives(path for path, _ in tree.files() if is_archive_name(path))


def _detect_format(head: bytes, name: Optional[str]) -> str:
    lname = (name or "").lower()
    if head[:2] == b"\x1f\x9d" or lname.endswith(UNSUPPORTED_SUFFIXES):
        raise UnsupportedArchiveFormat(f"LZW-compressed (.Z) archives are not supported: {name or '<bytes>'}")
    if head[:4] in (b"PK\x03\x04", b"PK\x05\x06", b"PK\x07\x08"):
        return "zip"
    if head[:2] == b"\x1f\x8b":
        return "gz"
    if head[:3] == b"BZh":
        return "bz2"
    if head[257:262] == b"ustar":
        return "tar"
    if lname.endswith((".zip", ".tar", ".gz", ".tgz", ".bz2", ".tbz2")):
        raise CorruptArchive(f"{name}: content does not match its archive extension")
    raise UnsupportedArchiveFormat(f"not a recognised archive: {name or '<bytes>'}")


def _sanitize(member: str) -> list[str]:
    """Split an archive member name into safe path parts; reject anything escaping the root."""
    cleaned = member.replace("\\", "/")
    if cleaned.startswith("/") or (len(cleaned) > 1 and cleaned[1] == ":"):
        raise CorruptArchive(f"absolute member path: {member!r}")
    parts = [p for p in cleaned.split("/") if p not in ("", ".")]
    if ".." in parts:
        raise CorruptArchive(f"member path escapes archive root: {member!r}")
    return parts


class _Builder:
    """Accumulates extracted members, in memory or under a destination directory."""

    def __init__(self, budget: ArchiveBudget, dest: Optional[Path]):
        self.budget = budget
        self.dest = dest
        self.root: dict = {}
        self.n_bytes = 0
        self.n_files = 0

    def remaining(self) -> int:
        return self.budget.max_extracted_bytes - self.n_bytes

    def _parent(self, parts: list[str]) -> dict:
        node = self.root
        for p in parts:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise CorruptArchive(f"{'/'.join(parts)}: path used both as file and directory")
            node = nxt
        return node

    def add_dir(self, parts: list[str]) -> None:
        if parts:
            self._parent(parts)

    def add_file(self, parts: list[str], data: bytes) -> None:
        if not parts:
            raise CorruptArchive("member with empty name")
        self.n_files += 1
        if self.n_files > self.budget.max_files:
            raise BudgetExceeded(f"archive holds more than {self.budget.max_files} files")
        self.n_bytes += len(data)
        if self.n_bytes > self.budget.max_extracted_bytes:
            raise BudgetExceeded(f"extracted size exceeds {self.budget.max_extracted_bytes} bytes")
        parent = self._parent(parts[:-1])
        if isinstance(parent.get(parts[-1]), dict):
            raise CorruptArchive(f"{'/'.join(parts)}: path used both as file and directory")
        if self.dest is not None:
            target = self.dest.joinpath(*parts)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            parent[parts[-1]] = target
        else:
            parent[parts[-1]] = data

    def build(self, root_name: str) -> FileTree:
        def node(name: str, value) -> FileNode:
            if isinstance(value, dict):
                return FileNode.directory(name, [node(k, v) for k, v in value.items()])
            if isinstance(value, Path):
                return _disk_file(name, value)
            return FileNode.file(name, value)

        return FileTree(node(root_name, self.root))


def _disk_file(name: str, path: Path) -> FileNode:
    return FileNode(name, NodeKind.FILE, size=path.stat().st_size, loader=path.read_bytes)


def _read_limited(stream, limit: int) -> bytes:
    """Read at most ``limit`` bytes; raise BudgetExceeded if the stream holds more."""
    buf = io.BytesIO()
    while True:
        chunk = stream.read(min(CHUNK, limit - buf.tell() + 1))
        if not chunk:
            break
        buf.write(chunk)
        if buf.tell() > limit:
            raise BudgetExceeded(f"extracted size exceeds budget ({limit} bytes remaining)")
    return buf.getvalue()


def _extract_zip(data: bytes, b: _Builder) -> None:
    try:
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            for info in zf.infolist():
                parts = _sanitize(info.filename)
                if info.is_dir():
                    b.add_dir(parts)
                    continue
                if info.flag_bits & 0x1:
                    raise UnsupportedArchiveFormat(f"password-protected member: {info.filename}")
                if info.file_size > b.remaining():
                    raise BudgetExceeded(f"{info.filename}: declared size {info.file_size} exceeds budget")
                with zf.open(info) as fh:
                    b.add_file(parts, _read_limited(fh, b.remaining()))
    except (zipfile.BadZipFile, zlib.error, EOFError) as exc:
        raise CorruptArchive(f"corrupt zip: {exc}") from exc


def _extract_tar(fileobj, b: _Builder) -> None:
    try:
        with tarfile.open(fileobj=fileobj, mode="r:*") as tf:
            for member in tf:
                parts = _sanitize(member.name)
                if member.isdir():
                    b.add_dir(parts)
                elif member.isfile():
                    if member.size > b.remaining():
                        raise BudgetExceeded(f"{member.name}: declared size {member.size} exceeds budget")
                    fh = tf.extractfile(member)
                    b.add_file(parts, _read_limited(fh, b.remaining()) if fh else b"")
                # links and device nodes are dropped
    except (tarfile.TarError, zlib.error, EOFError, OSError) as exc:
        raise CorruptArchive(f"corrupt tar: {exc}") from exc


def _single_member_name(name: Optional[str], fmt: str) -> str:
    if not name:
        return "data"
    base = posixpath.basename(name.replace("\\", "/"))
    suffix = ".gz" if fmt == "gz" else ".bz2"
    if base.lower().endswith(suffix) and len(base) > len(suffix):
        return base[: -len(suffix)]
    return base


def extract_archive(
    source: Union[bytes, str, os.PathLike],
    budget: Optional[ArchiveBudget] = None,
    *,
    name: Optional[str] = None,
    depth: int = 0,
    dest: Optional[Union[str, os.PathLike]] = None,
) -> FileTree:
    """Extract a zip, tar, tar.gz, tar.bz2 or single-file gzip into a FileTree.

    ``depth`` is the nesting level of ``source`` (0 for a top-level download);
    anything beyond ``budget.max_depth`` is refused. When ``dest`` is given the
    members are written below it and the tree reads them back lazily.
    """
    budget = budget or ArchiveBudget()
    if depth > budget.max_depth:
        raise BudgetExceeded(f"archive nesting deeper than {budget.max_depth}")
    if isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    else:
        path = Path(source)
        name = name or path.name
        try:
            data = path.read_bytes()
        except IsADirectoryError as exc:
            raise UnsupportedArchiveFormat(f"{path} is a directory") from exc
    fmt = _detect_format(data[:512], name)

    dest_path = Path(dest) if dest is not None else None
    if dest_path is not None:
        dest_path.mkdir(parents=True, exist_ok=True)
    b = _Builder(budget, dest_path)

    if fmt == "zip":
        _extract_zip(data, b)
    elif fmt == "tar":
        _extract_tar(io.BytesIO(data), b)
    else:
        try:
            raw = io.BytesIO(data)
            with (gzip.GzipFile(fileobj=raw) if fmt == "gz" else bz2.BZ2File(raw)) as fh:
                payload = _read_limited(fh, budget.max_extracted_bytes)
        except (OSError, EOFError, zlib.error) as exc:
            raise CorruptArchive(f"corrupt {fmt} stream: {exc}") from exc
        if payload[257:262] == b"ustar":
            _extract_tar(io.BytesIO(payload), b)
        else:
            b.add_file([_single_member_name(name, fmt)], payload)

    return b.build(posixpath.basename((name or "archive").replace("\\", "/")) or "archive")


def tree_from_directory(path: Union[str, os.PathLike], name: Optional[str] = None) -> FileTree:
    """Mirror an on-disk directory as a FileTree whose files are read lazily. Symlinks are skipped."""
    root = Path(path)
    if not root.is_dir():
        raise NotADirectoryError(str(root))

    def rec(p: Path, name: str) -> FileNode:
        children = []
        with os.scandir(p) as it:
            for entry in it:
                if entry.is_symlink():
                    continue
                if entry.is_dir():
                    children.append(rec(Path(entry.path), entry.name))
                elif entry.is_file():
                    children.append(_disk_file(entry.name, Path(entry.path)))
        return FileNode.directory(name, children)

    return FileTree(rec(root, name or root.resolve().name or "root"))
