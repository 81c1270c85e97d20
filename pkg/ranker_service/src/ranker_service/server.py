"""HTTP scoring endpoint implementing the remote-scorer protocol:
``POST {kind, question, candidates} -> {scores}``, order-aligned.

Serving is a pure function of (artifact, request): the model runs in eval
mode under a lock, so concurrent requests are fine and a frozen artifact
always returns identical scores.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .model import KINDS, ScoringModel, load_model


class ScoringHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length))
        except (ValueError, TypeError):
            self._send(400, {"error": "body must be JSON"})
            return
        kind = body.get("kind")
        question = body.get("question")
        candidates = body.get("candidates")
        if kind not in KINDS:
            self._send(400, {"error": f"kind must be one of {list(KINDS)}"})
            return
        if not isinstance(question, str) or not question:
            self._send(400, {"error": "question must be a non-empty string"})
            return
        if not isinstance(candidates, list) or not all(
            isinstance(c, str) for c in candidates
        ):
            self._send(400, {"error": "candidates must be a list of strings"})
            return
        server: ScoringServer = self.server  # type: ignore[assignment]
        with server.model_lock:
            scores = server.model.score(question, candidates, kind)
        self._send(200, {"scores": scores})


class ScoringServer(ThreadingHTTPServer):
    def __init__(self, address: tuple[str, int], model: ScoringModel):
        super().__init__(address, ScoringHandler)
        self.model = model
        self.model_lock = threading.Lock()

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/"


def start_server(model: ScoringModel, host: str = "127.0.0.1", port: int = 0) -> ScoringServer:
    """Start serving in a daemon thread; returns the running server."""
    server = ScoringServer((host, port), model)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server


def serve(artifact_dir: str | Path, host: str = "127.0.0.1", port: int = 8090) -> None:
    """Blocking entry point: load an artifact and serve until interrupted."""
    model = load_model(artifact_dir)
    server = ScoringServer((host, port), model)
    print(f"scoring endpoint at {server.url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
