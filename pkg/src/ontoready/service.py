"""Local HTTP front end for one annotation session.

The service wraps a single AnnotationSession: the browser UI (or any client)
reads the current candidate from GET /session, posts decisions one at a time,
and finalizes once the walk is complete.  All matching and validation logic
stays in the annotation module; the handlers only translate HTTP to method
calls, so a scripted run and an HTTP run of the same decisions produce
byte-identical sheets.

Decision posts are serialized behind one lock.  The service holds one session
for its whole lifetime; creating another (POST /session) is refused with 409.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .annotation import (
    ACCEPT,
    NEW,
    SKIP,
    AnnotationError,
    AnnotationSession,
    Decision,
    ValidationFailed,
    export_sheet,
)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
    ".png": "image/png",
}

_ACTIONS = {"accept": ACCEPT, "new": NEW, "skip": SKIP}


class _MalformedDecision(Exception):
    pass


def session_view(session: AnnotationSession) -> dict:
    """The stable JSON shape front ends render; hits mirror the core search."""
    index, total = session.progress()
    candidate = session.current()
    if candidate is None:
        return {"done": True, "index": index, "total": total, "candidate": None, "hits": []}
    return {
        "done": False,
        "index": index,
        "total": total,
        "candidate": {
            "iri": candidate.iri,
            "label": session.current_label(),
            "gloss": candidate.gloss,
            "kind": candidate.kind,
            "parent_label": session.current_parent_label(),
        },
        "hits": [
            {
                "gid": hit.gid,
                "preferred": hit.synset.preferred,
                "wsr": hit.wsr,
                "gloss": hit.synset.gloss,
            }
            for hit in session.hits_for_current()
        ],
    }


def _parse_decision(body: bytes) -> Decision:
    try:
        payload = json.loads(body.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as err:
        raise _MalformedDecision(f"body is not valid JSON: {err}") from err
    if not isinstance(payload, dict):
        raise _MalformedDecision("decision must be a JSON object")
    action = payload.get("action")
    if action not in _ACTIONS:
        raise _MalformedDecision(f"action must be one of {sorted(_ACTIONS)}")
    verb = _ACTIONS[action]
    if verb == ACCEPT:
        gid = payload.get("gid")
        if not isinstance(gid, int) or isinstance(gid, bool) or gid <= 0:
            raise _MalformedDecision("accept needs a positive integer 'gid'")
        override = payload.get("override", False)
        if not isinstance(override, bool):
            raise _MalformedDecision("'override' must be a boolean")
        return Decision(ACCEPT, gid=gid, override=override)
    if verb == NEW:
        gloss = payload.get("gloss")
        if not isinstance(gloss, str) or not gloss.strip():
            raise _MalformedDecision("new-concept needs a non-empty 'gloss'")
        return Decision(NEW, gloss=gloss)
    return Decision(SKIP)


class ServiceState:
    def __init__(self, session: AnnotationSession, static_dir=None, on_finalize=None):
        self.session = session
        self.lock = threading.Lock()
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self.on_finalize = on_finalize
        self.mapping = None  # set once finalize succeeds


def _build_handler(state: ServiceState):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, format, *args):  # quiet by default
            pass

        def _send(self, status: int, body: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _json(self, status: int, payload) -> None:
            body = json.dumps(payload, sort_keys=True).encode("utf-8")
            self._send(status, body, "application/json")

        def _error(self, status: int, message: str) -> None:
            self._json(status, {"error": message})

        def _read_body(self) -> bytes:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length) if length else b""

        def do_GET(self):
            url = urlsplit(self.path)
            if url.path == "/session":
                with state.lock:
                    self._json(200, session_view(state.session))
            elif url.path == "/sheet":
                with state.lock:
                    text = export_sheet(state.session.sheet())
                self._send(200, text.encode("utf-8"), "text/csv; charset=utf-8")
            elif url.path == "/core/search":
                self._search(parse_qs(url.query))
            else:
                self._static(url.path)

        def _search(self, params: dict) -> None:
            lemma = (params.get("lemma") or [""])[0]
            if not lemma:
                self._error(400, "missing 'lemma' parameter")
                return
            language = (params.get("lang") or [state.session.language])[0]
            core = state.session.core
            if not core.has_language(language):
                self._json(200, {"hits": []})
                return
            hits = [
                {
                    "gid": hit.gid,
                    "preferred": hit.synset.preferred,
                    "wsr": hit.wsr,
                    "gloss": hit.synset.gloss,
                }
                for hit in core.search_synonymous(lemma, language)
            ]
            self._json(200, {"hits": hits})

        def _static(self, path: str) -> None:
            if state.static_dir is None:
                self._error(404, f"no such resource: {path}")
                return
            relative = path.lstrip("/") or "index.html"
            target = (state.static_dir / relative).resolve()
            # refuse anything that escapes the static root
            if not target.is_relative_to(state.static_dir) or not target.is_file():
                self._error(404, f"no such resource: {path}")
                return
            content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self._send(200, target.read_bytes(), content_type)

        def do_POST(self):
            url = urlsplit(self.path)
            if url.path == "/session":
                self._error(409, "a session is already active on this service")
            elif url.path == "/decision":
                self._decision()
            elif url.path == "/finalize":
                self._finalize()
            else:
                self._error(404, f"no such resource: {url.path}")

        def _decision(self) -> None:
            try:
                decision = _parse_decision(self._read_body())
            except _MalformedDecision as err:
                self._error(400, str(err))
                return
            with state.lock:
                if state.session.done:
                    self._error(409, "session already complete")
                    return
                try:
                    state.session.decide(decision)
                except AnnotationError as err:
                    self._error(400, str(err))
                    return
                self._json(200, session_view(state.session))

        def _finalize(self) -> None:
            with state.lock:
                if state.mapping is not None:
                    self._error(409, "session already finalized")
                    return
                if not state.session.done:
                    index, total = state.session.progress()
                    self._error(409, f"session not complete ({index}/{total})")
                    return
                try:
                    mapping = state.session.finalize()
                except ValidationFailed as err:
                    violations = [
                        {
                            "code": v.code,
                            "severity": v.severity,
                            "row": v.row,
                            "message": v.message,
                        }
                        for v in err.violations
                    ]
                    self._json(422, {"violations": violations})
                    return
                state.mapping = mapping
                if state.on_finalize is not None:
                    state.on_finalize(mapping, state.session.sheet())
                self._json(200, {"mapping": {str(k): v for k, v in mapping.items()}})

    return Handler


def make_server(
    session: AnnotationSession,
    host: str = "127.0.0.1",
    port: int = 0,
    static_dir=None,
    on_finalize=None,
) -> ThreadingHTTPServer:
    """Build the server without starting it; port 0 picks a free port."""
    state = ServiceState(session, static_dir=static_dir, on_finalize=on_finalize)
    server = ThreadingHTTPServer((host, port), _build_handler(state))
    server.service_state = state
    return server
