"""Dataset repository client.

A dataset is resolved in three tiers, first success wins:

* the repository's machine-readable data endpoint (result tagged ``uci``);
* a per-dataset importer from an :class:`OverrideRegistry`;
* scraping the dataset page for its ``.zip``, downloading, extracting and
  running the import pipeline (both of the latter tagged ``custom``).
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional
from urllib.parse import urljoin, urlsplit

import requests
from filelock import FileLock

from .archive import extract_archive, tree_from_directory
from .errors import (
    EmptyBody,
    NetworkError,
    NoDownloadLink,
    OfflineMiss,
    OverrideUnavailable,
    SizeLimitExceeded,
)
from .model import DatasetRef, Delimiter, ImportResult, Source, Table
from .pipeline import PipelineConfig, import_tree
from .sniffer import decode_text, finalize_table, parse_delimited

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://archive.ics.uci.edu"
DEFAULT_CACHE_DIR = Path("~/.cache/tabfetch").expanduser()
CHUNK = 64 * 1024


@dataclass(frozen=True)
class FetchConfig:
    base_url: str = DEFAULT_BASE_URL
    api_url_template: Optional[str] = None
    cache_dir: Path = DEFAULT_CACHE_DIR
    max_download_bytes: int = 100 * 10**6
    timeout: float = 120.0
    offline: bool = False

    def __post_init__(self):
        if self.max_download_bytes <= 0:
            raise ValueError("max_download_bytes must be positive")
        object.__setattr__(self, "base_url", self.base_url.rstrip("/"))
        object.__setattr__(self, "cache_dir", Path(self.cache_dir).expanduser())
        if self.api_url_template is not None and "{id}" not in self.api_url_template:
            raise ValueError("api_url_template needs an {id} placeholder")

    @classmethod
    def from_env(cls, env: Optional[Mapping[str, str]] = None, **overrides) -> "FetchConfig":
        """Defaults, then LUCIE_* environment variables, then explicit non-None keyword overrides."""
        env = os.environ if env is None else env
        kwargs = {}
        if env.get("LUCIE_BASE_URL"):
            kwargs["base_url"] = env["LUCIE_BASE_URL"]
        if env.get("LUCIE_API_URL_TEMPLATE"):
            kwargs["api_url_template"] = env["LUCIE_API_URL_TEMPLATE"]
        if env.get("LUCIE_CACHE_DIR"):
            kwargs["cache_dir"] = Path(env["LUCIE_CACHE_DIR"])
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def api_url(self, dataset_id: int) -> str:
        template = self.api_url_template or self.base_url + "/static/public/{id}/data.csv"
        return template.format(id=dataset_id)

    def page_url(self, dataset_id: int) -> str:
        return f"{self.base_url}/dataset/{dataset_id}"


Importer = Callable[[DatasetRef, FetchConfig], Mapping[str, Table]]


@dataclass
class OverrideRegistry:
    importers: Dict[int, Importer] = field(default_factory=dict)

    def register(self, dataset_id: int, importer: Optional[Importer] = None):
        """Register ``importer`` for ``dataset_id``; usable as a decorator when ``importer`` is omitted."""
        if importer is None:
            return lambda fn: self.register(dataset_id, fn)
        self.importers[int(dataset_id)] = importer
        return importer

    def get(self, dataset_id: int) -> Optional[Importer]:
        return self.importers.get(dataset_id)

    def __contains__(self, dataset_id: object) -> bool:
        return dataset_id in self.importers


# datasets whose archives are impractical to parse and that have cleaned third-party mirrors
MIRRORED_DATASETS = {
    34: "Diabetes",
    121: "EEG Database",
    132: "Movie",
    137: "Reuters-21578 Text Categorization Collection",
}


def _mirror_stub(title: str) -> Importer:
    def importer(ref: DatasetRef, cfg: FetchConfig) -> Mapping[str, Table]:
        raise OverrideUnavailable(f"no mirror importer shipped for #{ref.id} ({title})")

    return importer


def default_registry() -> OverrideRegistry:
    """Registry pre-populated with placeholder entries for the known mirrored datasets.

    The placeholders raise OverrideUnavailable, so those datasets fall through
    to the archive pipeline until a real importer is registered in their place.
    """
    reg = OverrideRegistry()
    for dataset_id, title in MIRRORED_DATASETS.items():
        reg.register(dataset_id, _mirror_stub(title))
    return reg


def _digest(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


def _get(url: str, cfg: FetchConfig, stream: bool = False) -> requests.Response:
    if cfg.offline:
        raise OfflineMiss(f"offline mode: refusing to contact {url}")
    try:
        return requests.get(url, timeout=cfg.timeout, stream=stream)
    except requests.RequestException as exc:
        raise NetworkError(f"GET {url} failed: {exc}") from exc


def _stream_body(resp: requests.Response, limit: int, url: str, sink) -> int:
    declared = resp.headers.get("Content-Length")
    if declared and declared.isdigit() and int(declared) > limit:
        raise SizeLimitExceeded(f"{url}: {declared} bytes exceeds the {limit}-byte limit")
    received = 0
    try:
        for chunk in resp.iter_content(CHUNK):
            received += len(chunk)
            if received > limit:
                raise SizeLimitExceeded(f"{url}: more than {limit} bytes received")
            sink.write(chunk)
    except requests.RequestException as exc:
        raise NetworkError(f"GET {url} interrupted: {exc}") from exc
    return received


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".part")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _api_table(body: bytes, url: str) -> Optional[Table]:
    text = decode_text(body)
    if not text:
        return None
    parsed = parse_delimited(text, url, Delimiter.COMMA)
    if parsed is None:
        return None
    return finalize_table(parsed[0], "data.csv", parsed[1])


def probe_structured_api(dataset_id: int, cfg: FetchConfig) -> Optional[ImportResult]:
    """Try the repository's machine-readable endpoint; None means "not importable this way".

    A successful body is cached, and in offline mode only that cache is consulted.
    """
    url = cfg.api_url(dataset_id)
    cached = cfg.cache_dir / f"{_digest(url)}.api"
    if cached.exists():
        body = cached.read_bytes()
    elif cfg.offline:
        return None
    else:
        resp = _get(url, cfg, stream=True)
        with resp:
            if resp.status_code != 200:
                log.info("structured endpoint for #%s answered %s", dataset_id, resp.status_code)
                return None
            buf = io.BytesIO()
            _stream_body(resp, cfg.max_download_bytes, url, buf)
        body = buf.getvalue()
    table = _api_table(body, url)
    if table is None:
        return None
    if not cached.exists():
        _atomic_write(cached, body)
    return ImportResult(Source.UCI, {"data.csv": table})


class _AnchorCollector(HTMLParser):
    def __init__(self):
        super().__init__()
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            for key, value in attrs:
                if key == "href" and value:
                    self.hrefs.append(value.strip())


def resolve_download_url(dataset_id: int, page_html: str, base_url: str = DEFAULT_BASE_URL) -> str:
    """First anchor in document order whose target is a ``.zip``, made absolute."""
    parser = _AnchorCollector()
    parser.feed(page_html)
    parser.close()
    for href in parser.hrefs:
        if urlsplit(href).path.lower().endswith(".zip"):
            return urljoin(base_url.rstrip("/") + "/", href)
    raise NoDownloadLink(f"dataset #{dataset_id}: no .zip download link on its page")


def download(url: str, cfg: FetchConfig) -> Path:
    """Fetch ``url`` into the cache and return the cached path.

    Concurrent callers for the same URL serialize on a lock file; the archive is
    committed with an atomic rename so a partial download is never visible.
    """
    target = cfg.cache_dir / f"{_digest(url)}.zip"
    if target.exists():
        return target
    if cfg.offline:
        raise OfflineMiss(f"offline mode and {url} is not cached")
    cfg.cache_dir.mkdir(parents=True, exist_ok=True)
    with FileLock(str(target) + ".lock", timeout=cfg.timeout):
        if target.exists():
            return target
        resp = _get(url, cfg, stream=True)
        with resp:
            if resp.status_code != 200:
                raise NetworkError(f"GET {url} answered HTTP {resp.status_code}")
            fd, tmp = tempfile.mkstemp(dir=cfg.cache_dir, prefix=target.name + ".", suffix=".part")
            try:
                with os.fdopen(fd, "wb") as fh:
                    received = _stream_body(resp, cfg.max_download_bytes, url, fh)
                if received == 0:
                    raise EmptyBody(f"{url}: server returned 0 bytes")
                os.replace(tmp, target)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
    return target


def resolve_dataset(dataset_id: int, cfg: FetchConfig) -> DatasetRef:
    """Find the download URL for ``dataset_id``, from the cache when possible."""
    page_url = cfg.page_url(dataset_id)
    ref_file = cfg.cache_dir / f"ref-{dataset_id}-{_digest(page_url)[:16]}.json"
    if ref_file.exists():
        url = json.loads(ref_file.read_text())["download_url"]
    elif cfg.offline:
        raise OfflineMiss(f"offline mode and dataset #{dataset_id} has never been fetched")
    else:
        resp = _get(page_url, cfg)
        if resp.status_code != 200:
            raise NoDownloadLink(f"dataset #{dataset_id}: page {page_url} answered HTTP {resp.status_code}")
        url = resolve_download_url(dataset_id, resp.text, cfg.base_url)
        _atomic_write(ref_file, json.dumps({"id": dataset_id, "download_url": url}).encode())
    return DatasetRef(dataset_id, page_url, url, str(cfg.cache_dir / f"{_digest(url)}.zip"))


def _extracted_dir(archive: Path, ref: DatasetRef, pcfg: PipelineConfig) -> Path:
    out = archive.with_suffix(".extracted")
    if out.is_dir():
        return out
    tmp = Path(tempfile.mkdtemp(dir=archive.parent, prefix=archive.stem + ".", suffix=".tmp"))
    try:
        extract_archive(archive, pcfg.budget, name=_archive_name(ref), dest=tmp)
        try:
            os.replace(tmp, out)
        except OSError:
            if not out.is_dir():
                raise
    finally:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)
    return out


def _archive_name(ref: DatasetRef) -> str:
    return Path(urlsplit(ref.download_url or "").path).name or f"{ref.id}.zip"


def fetch_dataset(
    dataset_id: int,
    cfg: Optional[FetchConfig] = None,
    registry: Optional[OverrideRegistry] = None,
    pcfg: Optional[PipelineConfig] = None,
) -> ImportResult:
    cfg = cfg or FetchConfig.from_env()
    registry = registry if registry is not None else default_registry()
    pcfg = pcfg or PipelineConfig()
    if isinstance(dataset_id, bool) or not isinstance(dataset_id, int) or dataset_id < 1:
        raise ValueError(f"dataset id must be a positive integer, got {dataset_id!r}")

    found = probe_structured_api(dataset_id, cfg)
    if found is not None:
        return found

    warnings: list[str] = []
    importer = registry.get(dataset_id)
    if importer is not None:
        ref = DatasetRef(dataset_id, cfg.page_url(dataset_id))
        try:
            tables = importer(ref, cfg)
        except OverrideUnavailable as exc:
            warnings.append(str(exc))
        else:
            if tables:
                return ImportResult(Source.CUSTOM, tables)
            warnings.append(f"override importer for #{dataset_id} returned no tables")

    ref = resolve_dataset(dataset_id, cfg)
    archive = download(ref.download_url, cfg)
    tree = tree_from_directory(_extracted_dir(archive, ref, pcfg), name=_archive_name(ref))
    result = import_tree(tree, pcfg)
    if warnings:
        result = replace(result, warnings=tuple(warnings) + result.warnings)
    return result
