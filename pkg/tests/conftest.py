import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from tabfetch.corpus import generate


class FixtureServer:
    """Tiny HTTP server for fetch tests.

    ``routes`` maps a request path to ``(status, body)``; ``body`` is bytes or a
    callable returning an iterable of byte chunks (streamed without a length).
    Every request path is appended to ``hits``.
    """

    def __init__(self):
        self.routes = {}
        self.hits = []
        self.forbidden = set()
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def do_GET(self):
                server.hits.append(self.path)
                if self.path in server.forbidden:
                    server.violations.append(self.path)
                status, body, headers = server.routes.get(self.path, (404, b"not found", {}))
                self.send_response(status)
                for k, v in headers.items():
                    self.send_header(k, v)
                try:
                    if callable(body):
                        self.send_header("Transfer-Encoding", "chunked")
                        self.send_header("Connection", "close")
                        self.end_headers()
                        for chunk in body():
                            self.wfile.write(b"%x\r\n%s\r\n" % (len(chunk), chunk))
                        self.wfile.write(b"0\r\n\r\n")
                    else:
                        self.send_header("Content-Length", str(len(body)))
                        self.end_headers()
                        self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass

        self.violations = []
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.httpd.daemon_threads = True
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}"
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def route(self, path, body, status=200, headers=None):
        self.routes[path] = (status, body, headers or {})

    def hits_for(self, path):
        return sum(1 for h in self.hits if h == path)

    def start(self):
        self.thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def server():
    s = FixtureServer().start()
    yield s
    s.stop()


@pytest.fixture
def fetch_env(server, tmp_path):
    """FetchConfig pointed at the fixture server with an empty cache."""
    from tabfetch.fetch import FetchConfig

    return FetchConfig(base_url=server.url, cache_dir=tmp_path / "cache", timeout=10)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("corpus")


@pytest.fixture(scope="session")
def make_fixture(corpus_dir):
    cache = {}

    def make(kind, seed=7):
        if (kind, seed) not in cache:
            cache[(kind, seed)] = generate(kind, seed, corpus_dir)
        return cache[(kind, seed)]

    return make


def pytest_collection_modifyitems(config, items):
    if os.environ.get("TABFETCH_NETWORK_TESTS") == "1":
        return
    skip = pytest.mark.skip(reason="network test; set TABFETCH_NETWORK_TESTS=1")
    for item in items:
        if "network" in item.keywords:
            item.add_marker(skip)


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.skipped and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], "skipped"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{verdict:<8} {name}")
