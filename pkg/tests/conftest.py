"""Shared fixtures: repository paths, scenario stores, and a scripted HTTP stub."""

from __future__ import annotations

import functools
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from timeliner.chunking import ChunkingConfig, chunk_document
from timeliner.embedding import HashEmbedder, embed_chunks, provider_fingerprint
from timeliner.events import parse_incident_csv, render_incident_document
from timeliner.knowledge_base import KnowledgeBase

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"
SCENARIO_DIR = DATA_DIR / "scenarios"
SAMPLE_DIR = DATA_DIR / "samples"
EVAL_DIR = DATA_DIR / "eval"
FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"
WIRE_DIR = FIXTURE_DIR / "wire"

# Splitter and fixed chunk length used when building each bundled scenario's
# store; the length is each scenario's longest event rounded up slightly.
SCENARIO_SETTINGS: dict[str, tuple[str, int]] = {
    "syn_flood": (". ", 210),
    "rhino_hunt": (" / ", 500),
    "phishing_email_1": (" / ", 725),
    "phishing_email_2": (" / ", 500),
    "unauthorised_access": (". ", 208),
    "dns_spoof": (". ", 200),
}

# Event count per bundled scenario CSV.
SCENARIO_EVENT_COUNTS: dict[str, int] = {
    "syn_flood": 30,
    "rhino_hunt": 8,
    "phishing_email_1": 15,
    "phishing_email_2": 20,
    "unauthorised_access": 25,
    "dns_spoof": 23,
}


def scenario_csv(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.csv"


@functools.lru_cache(maxsize=None)
def build_scenario_kb(name: str, dimension: int = 1024) -> KnowledgeBase:
    """Parse, render, chunk and embed one bundled scenario (cached)."""
    splitter, max_length = SCENARIO_SETTINGS[name]
    incident = parse_incident_csv(scenario_csv(name), source_label=name)
    document = render_incident_document(incident, splitter=splitter)
    chunks = chunk_document(
        document, ChunkingConfig(max_length=max_length, splitter=splitter)
    )
    embedder = HashEmbedder(dimension=dimension)
    matrix = embed_chunks(embedder, chunks)
    return KnowledgeBase(
        chunks, matrix, provider_fingerprint(embedder), scenario_label=name
    )


@pytest.fixture(scope="session")
def ua_kb() -> KnowledgeBase:
    """The audit-log scenario store most unit tests lean on."""
    return build_scenario_kb("unauthorised_access")


@pytest.fixture(scope="session")
def embedder() -> HashEmbedder:
    return HashEmbedder()


class StubServer:
    """Scripted local HTTP endpoint recording every request it serves.

    ``responses`` is a list of (status, payload) pairs consumed one per
    request; the last entry repeats once the script runs out. Each
    served request is appended to ``requests`` as a dict with ``path``,
    ``headers`` and the parsed JSON ``body``.
    """

    def __init__(self) -> None:
        self.requests: list[dict] = []
        self.responses: list[tuple[int, dict]] = [(200, {})]
        owner = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 - stdlib naming
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length) if length else b"{}"
                owner.requests.append(
                    {
                        "path": self.path,
                        "headers": {k: v for k, v in self.headers.items()},
                        "body": json.loads(raw.decode("utf-8")),
                    }
                )
                index = min(len(owner.requests), len(owner.responses)) - 1
                status, payload = owner.responses[index]
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args) -> None:  # keep test output clean
                pass

        self._httpd = HTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def url(self, path: str = "/") -> str:
        return f"http://127.0.0.1:{self.port}{path}"

    def start(self) -> "StubServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture()
def stub_server():
    server = StubServer().start()
    yield server
    server.stop()


def closed_port() -> int:
    """A port that is currently not listening (for connection-refused tests)."""
    import socket

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]
