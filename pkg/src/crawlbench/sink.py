"""In-memory triple store the crawler posts its results to."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .nodes import AppServer, Response
from .rdfio import RdfFormat, RdfParseError, canonical_line, parse

ACCEPTED = {RdfFormat.NTRIPLES, RdfFormat.TURTLE}


@dataclass
class SinkSnapshot:
    lines: frozenset[str]
    arrivals_ns: list[int]  # one per distinct triple, non-decreasing

    @property
    def size(self) -> int:
        return len(self.lines)


class SinkStore:
    """Deduplicating store keyed by canonical N-Triples line.

    ``write_through`` appends every new line to a file as it arrives.
    """

    def __init__(self, write_through: str | Path | None = None):
        self._lock = threading.Lock()
        self._lines: dict[str, int] = {}
        self._arrivals: list[int] = []
        self._graphs: dict[str, set[str]] = {}
        self._file = open(write_through, "a", encoding="utf-8") if write_through else None

    def ingest(self, body: bytes, content_type: str | None, graph: str | None = None) -> int:
        """Parse ``body`` and store its triples; returns the number of new ones.

        Raises ``ValueError`` (nothing stored) for unsupported types or
        unparseable bodies.
        """
        fmt = RdfFormat.from_media_type(content_type or "")
        if fmt not in ACCEPTED:
            raise ValueError(f"unsupported content type {content_type!r}")
        triples = parse(body, fmt)
        return self.add(triples, graph)

    def add(self, triples, graph: str | None = None) -> int:
        lines = sorted({canonical_line(t) for t in triples})
        new = 0
        with self._lock:
            for line in lines:
                if line in self._lines:
                    continue
                now = time.monotonic_ns()
                self._lines[line] = now
                self._arrivals.append(now)
                new += 1
                if self._file:
                    self._file.write(line + "\n")
            if graph is not None:
                self._graphs.setdefault(graph, set()).update(lines)
            if self._file:
                self._file.flush()
        return new

    def __len__(self) -> int:
        return len(self._lines)

    def snapshot(self) -> SinkSnapshot:
        with self._lock:
            return SinkSnapshot(frozenset(self._lines), list(self._arrivals))

    def graph(self, name: str) -> set[str]:
        with self._lock:
            return set(self._graphs.get(name, ()))

    def dump(self) -> str:
        with self._lock:
            return "".join(line + "\n" for line in sorted(self._lines))

    def close(self):
        if self._file:
            self._file.close()
            self._file = None


class SinkApp:
    def __init__(self, store: SinkStore):
        self.store = store

    def handle(self, method, target, accept=None, body=b"", content_type=None) -> Response:
        parts = urlsplit(target)
        if parts.path == "/sink" and method == "POST":
            graph = parse_qs(parts.query).get("graph", [None])[0]
            try:
                self.store.ingest(body, content_type, graph)
            except (ValueError, RdfParseError) as e:
                return Response(400, "text/plain; charset=utf-8", f"{e}\n".encode())
            return Response(204, "text/plain", b"")
        if parts.path == "/sink/dump" and method in ("GET", "HEAD"):
            return Response(200, RdfFormat.NTRIPLES.media_type, self.store.dump().encode())
        if parts.path in ("/sink", "/sink/dump"):
            return Response(405, "text/plain", b"method not allowed\n")
        return Response(404, "text/plain", b"not found\n")


class _SinkHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _serve(self):
        n = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(n) if n else b""
        resp = self.server.app.handle(self.command, self.path, None, body,
                                      self.headers.get("Content-Type"))
        self.send_response(resp.status)
        self.send_header("Content-Type", resp.content_type)
        self.send_header("Content-Length", str(len(resp.body)))
        self.end_headers()
        if self.command != "HEAD" and resp.status != 204:
            self.wfile.write(resp.body)

    do_GET = do_HEAD = do_POST = do_PUT = do_DELETE = _serve

    def log_message(self, fmt, *args):
        pass


class SinkServer(AppServer):
    def __init__(self, store: SinkStore | None = None, port: int = 0, host: str = "127.0.0.1"):
        self.store = store if store is not None else SinkStore()
        super().__init__(SinkApp(self.store), port, host, handler=_SinkHandler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/sink"
