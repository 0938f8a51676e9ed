"""HTTP service: chat, classify, ingest, health and metrics endpoints.

All bodies are JSON UTF-8. Errors come back as structured envelopes
({"error": {"code", "message"}}), never stack traces. Re-ingestion swaps
the knowledge snapshot atomically, so in-flight chats finish on the old
index. Permissive CORS headers are set so the browser panel can call the
API from another origin.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import Engine
from .errors import ConfigError, DarjabotError, DataError
from .ingest import SourceDocument, load_document

logger = logging.getLogger(__name__)


class ServiceMetrics:
    def __init__(self):
        self._lock = threading.Lock()
        self.counters: dict[str, int] = {}
        self.stage_ms: dict[str, list[float]] = {}

    def bump(self, name: str) -> None:
        with self._lock:
            self.counters[name] = self.counters.get(name, 0) + 1

    def observe_stages(self, path: str, stages: dict[str, float]) -> None:
        with self._lock:
            for stage, ms in stages.items():
                self.stage_ms.setdefault(f"{path}.{stage}", []).append(ms)

    def render(self) -> str:
        from .bench import percentile

        with self._lock:
            lines = [f"{name} {value}" for name, value in sorted(self.counters.items())]
            for key in sorted(self.stage_ms):
                samples = self.stage_ms[key]
                lines.append(f"stage_ms.{key}.count {len(samples)}")
                lines.append(f"stage_ms.{key}.p50 {percentile(samples, 50):.3f}")
                lines.append(f"stage_ms.{key}.p95 {percentile(samples, 95):.3f}")
        return "\n".join(lines) + "\n"


class _Handler(BaseHTTPRequestHandler):
    server_version = "darjabot/0.1"

    @property
    def engine(self) -> Engine:
        return self.server.engine  # type: ignore[attr-defined]

    @property
    def metrics(self) -> ServiceMetrics:
        return self.server.metrics  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        logger.debug("%s - %s", self.address_string(), fmt % args)

    # -- plumbing ----------------------------------------------------------

    def _send(self, status: int, payload: dict | str, content_type: str = "application/json") -> None:
        body = (
            json.dumps(payload, ensure_ascii=False).encode("utf-8")
            if isinstance(payload, dict)
            else payload.encode("utf-8")
        )
        self.send_response(status)
        self.send_header("Content-Type", f"{content_type}; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": {"code": code, "message": message}})

    def _json_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise DataError("empty request body")
        try:
            body = json.loads(raw.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise DataError(f"invalid JSON body: {exc}") from exc
        if not isinstance(body, dict):
            raise DataError("request body must be a JSON object")
        return body

    # -- routes ------------------------------------------------------------

    def do_OPTIONS(self):
        self._send(204, "", content_type="text/plain")

    def do_GET(self):
        if self.path == "/v1/healthz":
            self._send(200, {"status": "ok"})
        elif self.path == "/v1/metrics":
            self._send(200, self.metrics.render(), content_type="text/plain")
        else:
            self._error(404, "not_found", f"no route for GET {self.path}")

    def do_POST(self):
        try:
            if self.path == "/v1/chat":
                self._chat()
            elif self.path == "/v1/classify":
                self._classify()
            elif self.path == "/v1/ingest":
                self._ingest()
            else:
                self._error(404, "not_found", f"no route for POST {self.path}")
        except DataError as exc:
            self._error(400, "bad_request", str(exc))
        except ConfigError as exc:
            self._error(409, "conflict", str(exc))
        except DarjabotError as exc:
            logger.exception("request failed")
            self._error(502, "upstream_error", str(exc))
        except Exception as exc:  # noqa: BLE001 - boundary: no stack traces on the wire
            logger.exception("unhandled error")
            self._error(500, "internal_error", str(exc))

    def _chat(self):
        body = self._json_body()
        text = str(body.get("text", "") or "").strip()
        session_id = str(body.get("session_id", "") or "").strip()
        if not text:
            raise DataError("field 'text' must be a non-empty string")
        if not session_id:
            raise DataError("field 'session_id' must be a non-empty string")
        self.metrics.bump("chat_requests_total")
        reply = self.engine.handle_turn(session_id, text)
        path = reply.route.path
        self.metrics.bump(f"chat_route_{path.value}_total")
        self.metrics.observe_stages(path.value, reply.stage_ms)
        intent = (
            self.engine.codec.decode(reply.route.intent_id)
            if reply.route.intent_id is not None
            else None
        )
        self._send(
            200,
            {
                "reply": reply.text,
                "route": path.value,
                "intent": intent,
                "confidence": reply.route.confidence,
                "sources": list(reply.sources),
                "latency_ms": {k: round(v, 3) for k, v in reply.stage_ms.items()},
            },
        )

    def _classify(self):
        body = self._json_body()
        text = str(body.get("text", "") or "").strip()
        if not text:
            raise DataError("field 'text' must be a non-empty string")
        self.metrics.bump("classify_requests_total")
        norm, prediction = self.engine.classify_text(text)
        self._send(
            200,
            {
                "intent": self.engine.codec.decode(prediction.intent_id),
                "confidence": prediction.confidence,
                "script": norm.script.value,
                "normalized": norm.text,
            },
        )

    def _ingest(self):
        body = self._json_body()
        if "path" in body:
            doc = load_document(str(body["path"]), doc_id=body.get("doc_id"))
        else:
            missing = [k for k in ("doc_id", "body") if not body.get(k)]
            if missing:
                raise DataError(f"ingest needs 'path' or inline fields; missing {missing}")
            doc = SourceDocument(
                str(body["doc_id"]),
                str(body.get("title", body["doc_id"])),
                str(body["body"]),
                str(body.get("format", "markdown")),
            )
        self.metrics.bump("ingest_requests_total")
        count = self.engine.reingest(doc)
        if self.engine.config.index_dir:
            try:
                self.engine.save_knowledge()
            except OSError as exc:
                logger.warning("could not persist index to %s: %s", self.engine.config.index_dir, exc)
        self._send(200, {"doc_id": doc.doc_id, "chunks": count})


class ChatService:
    """Owns the HTTP server; start() binds, serve_forever() blocks."""

    def __init__(self, engine: Engine, host: str | None = None, port: int | None = None):
        self.engine = engine
        self.host = host if host is not None else engine.config.host
        self.port = port if port is not None else engine.config.port
        self.metrics = ServiceMetrics()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    def start(self) -> tuple[str, int]:
        try:
            server = ThreadingHTTPServer((self.host, self.port), _Handler)
        except OSError as exc:
            raise ConfigError(f"cannot bind {self.host}:{self.port}: {exc}") from exc
        server.engine = self.engine  # type: ignore[attr-defined]
        server.metrics = self.metrics  # type: ignore[attr-defined]
        server.daemon_threads = True
        self._server = server
        return server.server_address[0], server.server_address[1]

    def serve_forever(self) -> None:
        if self._server is None:
            self.start()
        assert self._server is not None
        logger.info("serving on %s:%s", *self._server.server_address)
        self._server.serve_forever()

    def start_background(self) -> tuple[str, int]:
        addr = self.start()
        thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        thread.start()
        self._thread = thread
        return addr

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
