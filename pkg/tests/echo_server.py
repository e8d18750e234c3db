"""In-process scorer double speaking the wire protocol.

Scores are (len(hypothesis) mod 100) / 100, so tests can encode the expected
score in the hypothesis length. The ``mode`` attribute switches on protocol
violations for the error-path tests.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def do_GET(self):
        if self.path == "/healthz":
            body = b"ok"
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_error(404)

    def do_POST(self):
        server: EchoServer = self.server  # type: ignore[assignment]
        server.request_count += 1
        if self.path != "/v1/score":
            self.send_error(404)
            return
        if server.mode == "slow":
            time.sleep(server.delay)
        length = int(self.headers.get("Content-Length", "0"))
        payload = json.loads(self.rfile.read(length))
        pairs = payload.get("pairs", [])
        scores = [(len(p.get("hypothesis", "")) % 100) / 100 for p in pairs]
        if server.mode == "short" and scores:
            scores = scores[:-1]
        elif server.mode == "out_of_range":
            scores = [1.3 for _ in scores]
        elif server.mode == "not_json":
            body = b"definitely not json"
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        body = json.dumps({"scores": scores}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class EchoServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.mode = "echo"
        self.delay = 0.0
        self.request_count = 0
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}"

    def __enter__(self) -> "EchoServer":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.shutdown()
        self.server_close()
