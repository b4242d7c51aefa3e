"""Minimal read-only HTTP query service.

    GET /answer?q=<question>&k=<top_k>   -> query-result JSON
    GET /healthz                         -> status and index fingerprints

The pipeline's indexes and model are immutable, so requests are handled
concurrently by a threading server without further coordination.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .ensemble import answer_set_to_json
from .pipeline import Pipeline, question_id_for

__all__ = ["make_server", "serve"]


def _make_handler(pipeline: Pipeline):
    max_chars = pipeline.cfg.max_question_chars

    class Handler(BaseHTTPRequestHandler):
        server_version = "statuteqa"

        def log_message(self, fmt: str, *args) -> None:
            pass

        def _send(self, status: int, payload: dict | str) -> None:
            body = (
                payload if isinstance(payload, str) else json.dumps(payload)
            ).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            parsed = urlparse(self.path)
            if parsed.path == "/healthz":
                self._send(200, {"status": "ok", **pipeline.fingerprints()})
                return
            if parsed.path != "/answer":
                self._send(404, {"error": "unknown path"})
                return

            params = parse_qs(parsed.query)
            question = (params.get("q") or [""])[0]
            if not question.strip():
                self._send(400, {"error": "missing or empty question parameter q"})
                return
            if len(question) > max_chars:
                self._send(413, {"error": f"question longer than {max_chars} chars"})
                return
            top_k = None
            if "k" in params:
                try:
                    top_k = int(params["k"][0])
                except ValueError:
                    self._send(400, {"error": "k must be an integer"})
                    return
                if top_k < 1:
                    self._send(400, {"error": "k must be >= 1"})
                    return
            try:
                answer = pipeline.answer(
                    question_id_for(question), question, top_k=top_k
                )
            except Exception as exc:
                self._send(500, {"error": f"{type(exc).__name__}: {exc}"})
                return
            self._send(200, answer_set_to_json(answer))

    return Handler


def make_server(
    pipeline: Pipeline, host: str = "127.0.0.1", port: int = 8080
) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), _make_handler(pipeline))


def serve(pipeline: Pipeline, bind: str = "127.0.0.1:8080") -> None:
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"bind address must be host:port, got {bind!r}")
    server = make_server(pipeline, host, int(port_text))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
