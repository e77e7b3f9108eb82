"""Acceptance suite: one test per acceptance criterion, at the stated tolerance.

A PASS/FAIL line per test is printed in the "acceptance criteria" section of
the pytest summary (see conftest.py).
"""

import itertools
import json
import random
import string
import time
from pathlib import Path

import jsonschema
import pytest

from ground_truth import mismatches
from oracles import levenshtein_recursive, score_by_counting
from tabfetch.archive import edit_distance, extract_archive
from tabfetch.cli import main
from tabfetch.corpus import KINDS, FIELD_KINDS, generate_all
from tabfetch.errors import EmptyBody, SizeLimitExceeded
from tabfetch.fetch import FetchConfig, OverrideRegistry, download, fetch_dataset
from tabfetch.model import CandidateScore, Delimiter, FileNode, FileTree, RaggedTable, Source, Table
from tabfetch.output import MANIFEST_SCHEMA
from tabfetch.pipeline import import_extensionless, import_tree
from tabfetch.sniffer import score_table, sniff_text


def test_corpus_totality(tmp_path):
    start = time.perf_counter()
    truths = generate_all(tmp_path)
    assert len(truths) == 70 and {t["kind"] for t in truths} == set(KINDS)
    completed, exact, failures = 0, {k: 0 for k in KINDS}, []
    for truth in truths:
        result = import_tree(extract_archive(truth["archive"]))
        assert result.tables or result.fallback is not None
        completed += 1
        problems = mismatches(result, truth)
        if problems:
            failures.append((truth["kind"], truth["seed"], problems))
        else:
            exact[truth["kind"]] += 1
    elapsed = time.perf_counter() - start
    print(f"\ncompleted {completed}/70; exact matches per kind {exact}; {elapsed:.1f}s")
    assert completed == 70
    assert [f for f in failures if f[0] in FIELD_KINDS] == []
    assert elapsed < 60


def _cell(rng):
    roll = rng.random()
    if roll < 0.4:
        return f"{rng.uniform(-100, 100):.3f}"
    if roll < 0.7:
        return str(rng.randint(0, 9999))
    word = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(1, 8)))
    # a generated "na" or "nan" would be a genuine missing cell, not a clean one
    return word if word not in ("na", "nan", "null") else "x" + word


def _random_table(rng, truncate):
    width, n_rows = rng.randint(2, 8), rng.randint(5, 100)
    delim = rng.choice(list(Delimiter))
    rows = [[_cell(rng) for _ in range(width)] for _ in range(n_rows)]
    if rng.random() < 0.5:
        rows.insert(0, [f"attr_{j}" for j in range(width)])
    if truncate:
        for i in rng.sample(range(len(rows)), len(rows) // 10):
            rows[i] = rows[i][: rng.randint(1, width - 1)]
    return delim, "\n".join(delim.value.join(r) for r in rows) + "\n"


def test_delimiter_recovery():
    start = time.perf_counter()
    rng = random.Random(20240)
    clean_ok = 0
    for _ in range(200):
        delim, text = _random_table(rng, truncate=False)
        table, score = sniff_text(text)
        clean_ok += table.delimiter is delim and score.nan_fraction == 0
    ragged_ok = 0
    for _ in range(200):
        delim, text = _random_table(rng, truncate=True)
        found = sniff_text(text)
        ragged_ok += found is not None and found[0].delimiter is delim
    elapsed = time.perf_counter() - start
    print(f"\nclean {clean_ok}/200, truncated {ragged_ok}/200, {elapsed:.2f}s")
    assert clean_ok == 200
    assert ragged_ok / 200 >= 0.95
    assert elapsed < 10


def test_edit_distance_oracle():
    rng = random.Random(1234)
    alphabet = "abcde_."

    def word():
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))

    for _ in range(1000):
        a, b = word(), word()
        assert edit_distance(a, b) == levenshtein_recursive(a, b), (a, b)
    for _ in range(1000):
        a, b, c = word(), word(), word()
        assert edit_distance(a, b) == edit_distance(b, a)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)
        assert (edit_distance(a, b) == 0) == (a == b)


def test_score_oracle():
    alphabet = ["a", "", "?", "1"]

    def check(rows):
        got = score_table(RaggedTable(tuple(tuple(r) for r in rows))).as_tuple()
        assert got == score_by_counting(rows), rows

    # every table of at most 4x4 shape holding at most 6 cells, exhaustively
    exhaustive = 0
    for n_rows in range(1, 5):
        for widths in itertools.product(range(1, 5), repeat=n_rows):
            if sum(widths) > 6:
                continue
            for cells in itertools.product(alphabet, repeat=sum(widths)):
                it = iter(cells)
                check([[next(it) for _ in range(w)] for w in widths])
                exhaustive += 1
    # plus a seeded sample over the full space of shapes up to 4x4
    rng = random.Random(65536)
    for _ in range(10_000):
        widths = [rng.randint(1, 4) for _ in range(rng.randint(1, 4))]
        check([[rng.choice(alphabet) for _ in range(w)] for w in widths])
    print(f"\nexhaustive cases {exhaustive}, sampled 10000")
    assert exhaustive == 110_884


def _extensionless_tree(n_missing):
    cells = ["?"] * n_missing + [str(i) for i in range(40 - n_missing)]
    rows = [cells[i * 4 : i * 4 + 4] for i in range(10)]
    text = "\n".join(",".join(r) for r in rows) + "\n"
    return FileTree(FileNode.directory("ds", [FileNode.file("DATA", text.encode())]))


def test_extensionless_strictness():
    rng = random.Random(6)
    accepted = rejected = ties = 0
    for _ in range(1000):
        ext_missing = rng.randint(0, 39)
        txt_missing = ext_missing if rng.random() < 0.3 else rng.randint(0, 39)
        txt = CandidateScore(txt_missing / 40, rng.choice([0.5, 0.9, 1.0]), rng.randint(2, 8), rng.randint(1, 200))
        found = import_extensionless(_extensionless_tree(ext_missing), txt)
        should_accept = ext_missing / 40 < txt.nan_fraction
        assert (found is not None) == should_accept, (ext_missing, txt)
        if found is not None:
            assert found[1].score.nan_fraction == ext_missing / 40
        accepted += should_accept
        rejected += not should_accept
        ties += ext_missing == txt_missing
    print(f"\naccepted {accepted}, rejected {rejected} (ties {ties})")
    assert ties > 100 and accepted > 100 and rejected > 100


MB = 10**6


def test_size_guard(server, tmp_path):
    cfg = FetchConfig(base_url=server.url, cache_dir=tmp_path / "cache", timeout=30)
    assert cfg.max_download_bytes == 100 * MB
    block = b"\0" * MB
    server.route("/streamed.zip", lambda: (block for _ in range(101)))
    with pytest.raises(SizeLimitExceeded):
        download(server.url + "/streamed.zip", cfg)
    server.route("/declared.zip", b"\0" * (101 * MB))
    with pytest.raises(SizeLimitExceeded):
        download(server.url + "/declared.zip", cfg)
    server.route("/empty.zip", b"")
    with pytest.raises(EmptyBody):
        download(server.url + "/empty.zip", cfg)
    assert not any(p.suffix in (".zip", ".part") for p in cfg.cache_dir.iterdir())


def test_end_to_end_fixture_server(server, tmp_path, make_fixture):
    # branch 1: structured endpoint
    server.route("/static/public/53/data.csv", b"sl,sw,pl,pw,cls\n" + b"5.1,3.5,1.4,0.2,setosa\n" * 20)
    # branch 2: override importer; its page must never be scraped
    registry = OverrideRegistry()
    registry.register(34, lambda ref, cfg: {"mirror.csv": Table("mirror.csv", ["a", "b"], [[str(i), str(-i)] for i in range(12)])})
    # branch 3: page scrape plus zip of a corpus fixture
    truth = make_fixture("plain_tabular")
    server.route("/dataset/5", b'<html><a href="/static/public/5/plain.zip">Download</a></html>')
    server.route("/static/public/5/plain.zip", Path(truth["archive"]).read_bytes())
    server.forbidden = {"/dataset/53", "/dataset/34"}

    def run(dataset_id, *extra):
        out = tmp_path / f"out{dataset_id}{''.join(extra)}"
        argv = ["fetch", str(dataset_id), "--out", str(out), "--base-url", server.url, "--cache-dir", str(tmp_path / "cache"), *extra]
        code = main(argv, registry=registry)
        doc = json.loads((out / "manifest.json").read_text())
        jsonschema.validate(doc, MANIFEST_SCHEMA)
        return code, doc

    expected = {53: ("uci", ["data.csv"]), 34: ("custom", ["mirror.csv"]), 5: ("custom", truth["winners"])}
    online = {}
    for dataset_id, (source, names) in expected.items():
        code, doc = run(dataset_id)
        assert code == 0
        assert doc["source"] == source and doc["dataset_id"] == dataset_id
        assert sorted(t["name"] for t in doc["tables"]) == names
        online[dataset_id] = doc
    assert server.violations == []
    assert server.hits_for("/static/public/5/plain.zip") == 1

    hits_before = len(server.hits)
    for dataset_id in expected:
        code, doc = run(dataset_id, "--offline")
        assert code == 0 and doc == online[dataset_id]
    assert len(server.hits) == hits_before
    assert main(["fetch", "77", "--offline", "--base-url", server.url, "--cache-dir", str(tmp_path / "cache")]) == 1
    assert len(server.hits) == hits_before


@pytest.mark.network
def test_live_repository_smoke(tmp_path):
    cfg = FetchConfig.from_env(cache_dir=tmp_path)
    iris = fetch_dataset(53, cfg)
    assert iris.source is Source.UCI and any(t.n_rows > 0 for t in iris.tables.values())
    nonstandard = fetch_dataset(5, cfg)
    assert nonstandard.source is Source.CUSTOM
