"""Command-line interface.

Exit codes: 0 when the result passes validation, 2 when it does not, 1 on error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .archive import extract_archive, tree_from_directory
from .corpus import KINDS, generate
from .errors import TabfetchError
from .fetch import FetchConfig, OverrideRegistry, fetch_dataset
from .model import ImportResult, validate_result
from .output import write_result
from .pipeline import PipelineConfig, import_tree
from .sniffer import compare_scores, decode_text, is_perfect, sniff_all

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _report(result: ImportResult, args, dataset_id: Optional[int], out: Path) -> int:
    write_result(result, out, args.format, dataset_id)
    report = validate_result(result, args.min_rows, args.min_cols)
    print(f"source: {result.source.value}")
    for name, t in result.tables.items():
        print(f"  {name}: {t.n_rows} rows x {t.n_cols} cols")
    if result.used_fallback:
        print("  (fallback structure written to fallback.json)")
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"validation: {report.status}  -> {out}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(min_rows=args.min_rows, min_cols=args.min_cols)


def cmd_fetch(args) -> int:
    cfg = FetchConfig.from_env(
        base_url=args.base_url,
        api_url_template=args.api_url_template,
        cache_dir=args.cache_dir,
        max_download_bytes=args.max_bytes,
        timeout=args.timeout,
        offline=args.offline or None,
    )
    result = fetch_dataset(args.id, cfg, args.registry, _pipeline_config(args))
    return _report(result, args, args.id, Path(args.out or f"out/{args.id}"))


def cmd_import(args) -> int:
    path = Path(args.path)
    if path.is_dir():
        tree = tree_from_directory(path)
    elif path.exists():
        tree = extract_archive(path, _pipeline_config(args).budget)
    else:
        raise FileNotFoundError(f"no such file or directory: {path}")
    result = import_tree(tree, _pipeline_config(args))
    stem = path.name.split(".")[0] or "import"
    return _report(result, args, None, Path(args.out or f"out/{stem}"))


def cmd_sniff(args) -> int:
    data = Path(args.file).read_bytes()
    text = decode_text(data)
    if text is None:
        print("error: binary input", file=sys.stderr)
        return EXIT_ERROR
    parses = sniff_all(text, args.file)
    viable = [(d, s) for d, _, s in parses if s is not None and s.n_cols >= 2]
    winner = None
    if viable:
        winner = viable[0]
        for cand in viable[1:]:
            if compare_scores(cand[1], winner[1]) < 0:
                winner = cand
    print(f"{'delimiter':<10} {'nan_fraction':>12} {'regularity':>10} {'n_cols':>6} {'n_rows':>6} {'perfect':>7}")
    for d, _, s in parses:
        if s is None:
            print(f"{d.label:<10} {'-':>12} {'-':>10} {0:>6} {0:>6} {'no':>7}")
            continue
        mark = "  <- winner" if winner and winner[0] is d else ("  (single column)" if s.n_cols < 2 else "")
        perfect = "yes" if is_perfect(s) else "no"
        print(f"{d.label:<10} {s.nan_fraction:>12.4f} {s.regularity:>10.4f} {s.n_cols:>6} {s.n_rows:>6} {perfect:>7}{mark}")
    if winner is None:
        print("no multi-column parse")
    return EXIT_PASS


def cmd_corpus(args) -> int:
    truth = generate(args.kind, args.seed, args.dir)
    print(json.dumps(truth, indent=2))
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tabfetch", description="Import datasets from nonstandard archive layouts.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def output_flags(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--min-rows", type=int, default=10)
        sp.add_argument("--min-cols", type=int, default=2)

    f = sub.add_parser("fetch", help="fetch a repository dataset by id")
    f.add_argument("id", type=int)
    output_flags(f)
    f.add_argument("--max-bytes", type=int, help="download size limit (default 100000000)")
    f.add_argument("--offline", action="store_true", help="use the cache only")
    f.add_argument("--base-url", help="repository site (env LUCIE_BASE_URL)")
    f.add_argument("--api-url-template", help="structured data URL with {id} (env LUCIE_API_URL_TEMPLATE)")
    f.add_argument("--cache-dir", help="download cache (env LUCIE_CACHE_DIR)")
    f.add_argument("--timeout", type=float)
    f.set_defaults(func=cmd_fetch)

    i = sub.add_parser("import", help="import a local archive or directory")
    i.add_argument("path")
    output_flags(i)
    i.set_defaults(func=cmd_import)

    s = sub.add_parser("sniff", help="show delimiter scores for one file")
    s.add_argument("file")
    s.set_defaults(func=cmd_sniff)

    c = sub.add_parser("corpus", help="fixture corpus tools")
    csub = c.add_subparsers(dest="corpus_command", required=True)
    g = csub.add_parser("generate", help="write one fixture archive and print its ground truth")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("seed", type=int)
    g.add_argument("dir")
    g.set_defaults(func=cmd_corpus)
    return p


def main(argv: Optional[Sequence[str]] = None, registry: Optional[OverrideRegistry] = None) -> int:
    """Run the CLI. ``registry`` lets an embedding program supply its own override importers."""
    args = build_parser().parse_args(argv)
    args.registry = registry
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (TabfetchError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
