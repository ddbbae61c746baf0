"""Shared fixtures: a scriptable HTTP stub backend and tiny audio builders."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from storytrack.audio import AudioSegment
from storytrack.transcripts import TranscriptSegment


class StubBackend:
    """A one-endpoint HTTP server whose behavior each test scripts.

    ``responder`` receives the decoded JSON request body and returns
    ``(status, payload)`` where payload is a dict (sent as JSON) or raw
    bytes.  Requests are recorded for assertions.
    """

    def __init__(self):
        self.responder = lambda body: (200, {})
        self.requests: list[dict] = []
        self.headers_seen: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                outer.requests.append(body)
                outer.headers_seen.append({k.lower(): v for k, v in self.headers.items()})
                status, payload = outer.responder(body)
                data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_backend():
    backend = StubBackend()
    yield backend
    backend.close()


@pytest.fixture
def no_sleep(monkeypatch):
    """Capture retry backoff delays instead of actually sleeping."""
    delays: list[float] = []
    monkeypatch.setattr("storytrack.gateway._sleep", delays.append)
    return delays


def make_segment(index: int = 0, text: str = "You see a dragon in front of you.") -> TranscriptSegment:
    return TranscriptSegment(
        index=index,
        window_start_s=index * 30.0,
        window_end_s=(index + 1) * 30.0,
        text=text,
    )


def sine_segment(
    freq: float = 440.0,
    duration_s: float = 30.0,
    rate: int = 32000,
    index: int = 0,
    amplitude: float = 0.5,
) -> AudioSegment:
    t = np.arange(int(duration_s * rate)) / rate
    return AudioSegment(amplitude * np.sin(2 * np.pi * freq * t), rate, index=index)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(rep, "when", "call") == "call":
                name = nodeid.split("::")[-1]
                lines[name] = "PASS" if status == "passed" else "FAIL"
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in lines.items():
            terminalreporter.write_line(f"{verdict}: {name}")
