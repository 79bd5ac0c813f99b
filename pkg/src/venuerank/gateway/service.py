"""HTTP recommendation service over a trained checkpoint.

Endpoints (all UTF-8 JSON):

* ``POST /recommend`` -- {title, abstract, keywords, k} -> ranked venues
* ``GET /venues``     -- ordered venue list with aims & scope texts
* ``GET /health``     -- model id, venue count, variant
* ``POST /reload``    -- swap in a new checkpoint snapshot atomically

Requests are served against an immutable model snapshot; reload (or SIGHUP)
builds the new snapshot fully before swapping it in, so no request ever sees
a half-loaded model. Responses carry ``model_id`` so clients can detect
swaps. Invariant-violating requests get 400 naming the field; requests whose
cleaned feature text is empty get 422; unexpected failures are a bare 500.
"""

from __future__ import annotations

import json
import logging
import os
import signal
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from ..corpus import Document
from ..recmodel import VenueRankModel, load_model, model_id_for
from ..textprep import EmptyFeatureTextError

log = logging.getLogger(__name__)

MODEL_PATH_ENV = "VENUERANK_MODEL"


class RequestError(ValueError):
    """A request violated an invariant; carries the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class Snapshot:
    model: VenueRankModel
    model_id: str
    path: str


def recommend_payload(model: VenueRankModel, model_id: str, title: str,
                      abstract: str, keywords: list[str], k: int) -> dict:
    """Rank venues for a query; the CLI and the HTTP service share this path."""
    doc = Document(id="query", title=title, abstract=abstract, keywords=tuple(keywords))
    encoded = model.encode(doc)
    probs, scope_vec = model.predict_proba(encoded)
    venue_ids = model.venue_ids
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], venue_ids[i]))
    names = {v.venue_id: v.name for v in model.venues}
    ranked = []
    for i in order[:k]:
        entry = {
            "venue_id": venue_ids[i],
            "name": names[venue_ids[i]],
            "probability": float(probs[i]),
        }
        if scope_vec is not None:
            entry["scope_score"] = float(scope_vec[i])
        ranked.append(entry)
    return {"model_id": model_id, "ranked": ranked}


class RecommendService:
    """Owns the current snapshot; handlers only read it."""

    def __init__(self, model_path: str | Path):
        self._snapshot = self._build(Path(model_path))

    @staticmethod
    def _build(path: Path) -> Snapshot:
        model = load_model(path)
        model._ensure_scope_for_inference()
        return Snapshot(model=model, model_id=model_id_for(path), path=str(path))

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def reload(self, path: str | Path | None = None) -> Snapshot:
        target = Path(path) if path else Path(self._snapshot.path)
        snapshot = self._build(target)  # fully built before the swap
        self._snapshot = snapshot
        log.info("model snapshot swapped to %s (%s)", target, snapshot.model_id)
        return snapshot

    # ------------------------------------------------------------------

    def health(self) -> dict:
        snap = self._snapshot
        return {
            "model_id": snap.model_id,
            "n_venues": snap.model.config.n_venues,
            "variant": snap.model.config.variant,
            "combo": snap.model.config.combo.code,
            "uses_scope": snap.model.use_scope,
            "pipeline_version": snap.model.pipeline.version,
        }

    def venues(self) -> dict:
        snap = self._snapshot
        return {
            "model_id": snap.model_id,
            "venues": [
                {"venue_id": v.venue_id, "name": v.name, "aims_scope": v.aims_scope}
                for v in snap.model.venues
            ],
        }

    def recommend(self, payload: dict) -> dict:
        snap = self._snapshot
        n = snap.model.config.n_venues
        title = payload.get("title", "")
        abstract = payload.get("abstract", "")
        keywords = payload.get("keywords", [])
        if not isinstance(title, str):
            raise RequestError("title", "field 'title' must be a string")
        if not isinstance(abstract, str):
            raise RequestError("abstract", "field 'abstract' must be a string")
        if not isinstance(keywords, list) or not all(isinstance(x, str) for x in keywords):
            raise RequestError("keywords", "field 'keywords' must be a list of strings")
        if not (title.strip() or abstract.strip() or any(x.strip() for x in keywords)):
            raise RequestError("title/abstract/keywords",
                               "at least one of title/abstract/keywords must be nonempty")
        k = payload.get("k", min(10, n))
        if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= n:
            raise RequestError("k", f"field 'k' must be an integer in [1, {n}]")
        return recommend_payload(snap.model, snap.model_id, title, abstract, keywords, k)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "venuerank"

    @property
    def service(self) -> RecommendService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # route through logging, not stderr
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, body: dict) -> None:
        blob = json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(blob)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(blob)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        try:
            if self.path == "/health":
                self._send(200, self.service.health())
            elif self.path == "/venues":
                self._send(200, self.service.venues())
            else:
                self._send(404, {"error": "not found"})
        except Exception:
            log.exception("GET %s failed", self.path)
            self._send(500, {"error": "internal error"})

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            try:
                payload = json.loads(raw.decode("utf-8")) if raw else {}
            except (json.JSONDecodeError, UnicodeDecodeError):
                self._send(400, {"error": "request body is not valid json", "field": "body"})
                return
            if not isinstance(payload, dict):
                self._send(400, {"error": "request body must be a json object", "field": "body"})
                return
            if self.path == "/recommend":
                try:
                    self._send(200, self.service.recommend(payload))
                except RequestError as exc:
                    self._send(400, {"error": str(exc), "field": exc.field})
                except (EmptyFeatureTextError, ValueError) as exc:
                    # nothing usable survives preprocessing for this model
                    self._send(422, {"error": str(exc)})
            elif self.path == "/reload":
                snap = self.service.reload(payload.get("path"))
                self._send(200, {"model_id": snap.model_id})
            else:
                self._send(404, {"error": "not found"})
        except Exception:
            log.exception("POST %s failed", self.path)
            self._send(500, {"error": "internal error"})


def make_server(service: RecommendService, host: str = "127.0.0.1",
                port: int = 8765) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.service = service  # type: ignore[attr-defined]
    return server


def serve(model_path: str | Path | None = None, host: str = "127.0.0.1",
          port: int = 8765) -> None:
    """Run the service until interrupted; SIGHUP re-reads the checkpoint."""
    path = model_path or os.environ.get(MODEL_PATH_ENV)
    if not path:
        raise ValueError(f"no model path given and {MODEL_PATH_ENV} is unset")
    service = RecommendService(path)
    server = make_server(service, host, port)
    if hasattr(signal, "SIGHUP") and threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGHUP, lambda *_: service.reload())
    log.info("serving %s on %s:%d", path, host, server.server_address[1])
    try:
        server.serve_forever()
    finally:
        server.server_close()
