"""HTTP servers for the five node types.

Each node answers ``/robots.txt`` plus its type-specific surface. Every
request is logged with a monotonic arrival time before it is answered;
nothing is ever refused because robots.txt disallows it, the benchmark only
observes what the crawler does.
"""

from __future__ import annotations

import html
import json
import logging
import re
import threading
import time
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .manifest import CloudManifest, NodeData
from .model import NodeSpec, NodeType
from .rdfgen import dump_path
from .rdfio import (
    Compression,
    NotAcceptable,
    RdfFormat,
    compress,
    negotiate,
    serialize,
)

log = logging.getLogger(__name__)

DISALLOWED_PREFIX = "/disallowed/"
SPARQL_RESULTS_JSON = "application/sparql-results+json"


@dataclass(frozen=True)
class RequestRecord:
    node_id: int
    path: str
    arrival_ns: int
    disallowed_hit: bool
    method: str = "GET"
    query: str = ""

    def to_dict(self) -> dict:
        return {"node": self.node_id, "method": self.method, "path": self.path,
                "query": self.query, "arrival_ns": self.arrival_ns,
                "disallowed_hit": self.disallowed_hit}

    @classmethod
    def from_dict(cls, d) -> RequestRecord:
        return cls(d["node"], d["path"], d["arrival_ns"], d["disallowed_hit"],
                   d.get("method", "GET"), d.get("query", ""))


@dataclass
class Response:
    status: int
    content_type: str
    body: bytes

    @property
    def text(self) -> str:
        return self.body.decode("utf-8")


class RequestLog:
    """Append-only, arrival-ordered request log of one node."""

    def __init__(self, node_id: int):
        self.node_id = node_id
        self._records: list[RequestRecord] = []
        self._lock = threading.Lock()

    def append(self, path: str, method: str = "GET", query: str = "") -> RequestRecord:
        with self._lock:
            # Timestamp under the lock so list order equals arrival order.
            rec = RequestRecord(self.node_id, path, time.monotonic_ns(),
                                path.startswith(DISALLOWED_PREFIX), method, query)
            self._records.append(rec)
        return rec

    def drain(self) -> list[RequestRecord]:
        with self._lock:
            out, self._records = self._records, []
        return out

    def snapshot(self) -> list[RequestRecord]:
        with self._lock:
            return list(self._records)


def robots_txt(crawl_delay: float, disallowed) -> str:
    lines = ["User-agent: *"]
    if disallowed:
        lines.append(f"Disallow: {DISALLOWED_PREFIX}")
    if crawl_delay > 0:
        lines.append(f"Crawl-delay: {crawl_delay:g}")
    return "\n".join(lines) + "\n"


def _path_of(iri: str) -> str:
    return urlsplit(iri).path or "/"


def _text(status, body: str, ctype="text/plain; charset=utf-8") -> Response:
    return Response(status, ctype, body.encode("utf-8"))


def _json(status, obj) -> Response:
    return Response(status, "application/json", json.dumps(obj, sort_keys=True).encode())


def _rdf(triples, accept) -> Response:
    try:
        fmt = negotiate(accept)
    except NotAcceptable:
        return _text(406, "no acceptable RDF serialization\n")
    return Response(200, fmt.media_type, serialize(triples, fmt))


_VAR = r"\?([A-Za-z_][A-Za-z0-9_]*)"
_BGP = rf"\{{\s*{_VAR}\s+{_VAR}\s+{_VAR}\s*\.?\s*\}}"
_MODIFIERS = r"((?:\s*(?:LIMIT|OFFSET)\s+\d+)*)\s*$"
_SELECT = re.compile(rf"^\s*SELECT\s+{_VAR}\s+{_VAR}\s+{_VAR}\s+WHERE\s*{_BGP}{_MODIFIERS}",
                     re.IGNORECASE | re.DOTALL)
_CONSTRUCT = re.compile(rf"^\s*CONSTRUCT\s*{_BGP}\s*WHERE\s*{_BGP}{_MODIFIERS}",
                        re.IGNORECASE | re.DOTALL)
_MODIFIER = re.compile(r"(LIMIT|OFFSET)\s+(\d+)", re.IGNORECASE)


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class SparqlQuery:
    form: str  # "SELECT" or "CONSTRUCT"
    variables: tuple[str, str, str]
    limit: int | None
    offset: int


def parse_sparql(query: str) -> SparqlQuery:
    """Parse the supported query subset: one all-variable triple pattern,
    as SELECT or CONSTRUCT, with optional LIMIT/OFFSET."""
    m = _SELECT.match(query)
    if m:
        projected, where, mods = m.groups()[0:3], m.groups()[3:6], m.group(7)
        if len(set(where)) != 3 or set(projected) != set(where):
            raise QueryError("SELECT must project the three distinct pattern variables")
        form, variables = "SELECT", projected
    else:
        m = _CONSTRUCT.match(query)
        if not m:
            raise QueryError(
                "unsupported query; expected SELECT ?s ?p ?o WHERE { ?s ?p ?o } or "
                "CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o } with optional LIMIT/OFFSET"
            )
        template, where, mods = m.groups()[0:3], m.groups()[3:6], m.group(7)
        if len(set(where)) != 3 or tuple(template) != tuple(where):
            raise QueryError("CONSTRUCT template must repeat the WHERE pattern")
        form, variables = "CONSTRUCT", where
    limit, offset = None, 0
    seen = set()
    for key, value in _MODIFIER.findall(mods or ""):
        key = key.upper()
        if key in seen:
            raise QueryError(f"duplicate {key}")
        seen.add(key)
        if key == "LIMIT":
            limit = int(value)
        else:
            offset = int(value)
    return SparqlQuery(form, tuple(variables), limit, offset)


class NodeApp:
    """Request handling for one node, independent of the HTTP transport."""

    def __init__(self, node: NodeSpec, data: NodeData, crawl_delay: float = 0.0):
        self.node = node
        self.data = data
        self.log = RequestLog(node.id)
        self.robots = robots_txt(crawl_delay, data.disallowed)
        served = data.served_triples()
        self._sorted = sorted(set(served))
        self._by_path: dict[str, list] = {}
        if node.type is NodeType.DEREFERENCING:
            for iri in data.rdf.resources + data.rdf.disallowed:
                self._by_path[_path_of(iri)] = []
            for t in served:
                self._by_path.setdefault(_path_of(t[0]), []).append(t)
        elif node.type is NodeType.DUMP_FILE:
            self._dump_path = dump_path(node)
            fmt = RdfFormat.parse(node.dump_format)
            codec = Compression.parse(node.compression)
            self._dump_type = codec.media_type or fmt.media_type
            self._dump = compress(serialize(self._sorted, fmt), codec,
                                  inner_name="dump" + fmt.extension)
        elif node.type is NodeType.RDFA:
            self._page = render_rdfa_page(node, served).encode("utf-8")
        elif node.type is NodeType.CKAN:
            self._datasets = {d["id"]: d for d in data.datasets}
            self._index = render_ckan_index(node, data.datasets).encode("utf-8")

    def handle(self, method: str, target: str, accept: str | None = None,
               body: bytes = b"", content_type: str | None = None) -> Response:
        """Log and answer one request. ``target`` is the request-target
        (path plus optional query)."""
        parts = urlsplit(target)
        path = parts.path or "/"
        self.log.append(path, method, parts.query)
        if method not in ("GET", "HEAD", "POST"):
            return _text(405, "method not allowed\n")
        if path == "/robots.txt":
            return _text(200, self.robots)
        if method == "POST" and self.node.type is not NodeType.SPARQL:
            return _text(405, "method not allowed\n")
        try:
            query = parse_qs(parts.query, keep_blank_values=True, strict_parsing=False)
        except ValueError:
            return _text(400, "malformed query string\n")
        handler = {
            NodeType.DEREFERENCING: self._deref,
            NodeType.DUMP_FILE: self._dump_file,
            NodeType.SPARQL: self._sparql,
            NodeType.CKAN: self._ckan,
            NodeType.RDFA: self._rdfa,
        }[self.node.type]
        return handler(method, path, query, accept, body, content_type)

    def _deref(self, method, path, query, accept, body, ctype):
        triples = self._by_path.get(path)
        if triples is None:
            return _text(404, "unknown resource\n")
        return _rdf(triples, accept)

    def _dump_file(self, method, path, query, accept, body, ctype):
        if path != self._dump_path:
            return _text(404, "not found\n")
        return Response(200, self._dump_type, self._dump)

    def _rdfa(self, method, path, query, accept, body, ctype):
        if path not in ("/index.html", "/"):
            return _text(404, "not found\n")
        return Response(200, "text/html; charset=utf-8", self._page)

    def _ckan(self, method, path, query, accept, body, ctype):
        if path == "/":
            return Response(200, "text/html; charset=utf-8", self._index)
        if path == "/api/3/action/package_list":
            return _json(200, {"success": True, "result": sorted(self._datasets)})
        if path == "/api/3/action/package_show":
            ids = query.get("id")
            if not ids:
                return _json(400, {"success": False, "error": {"message": "missing id"}})
            d = self._datasets.get(ids[0])
            if d is None:
                return _json(404, {"success": False, "error": {"message": "Not found"}})
            result = {
                "id": d["id"],
                "name": d["id"],
                "resources": [{"id": f"{d['id']}-resource-0", "url": d["url"]}],
            }
            return _json(200, {"success": True, "result": result})
        return _text(404, "not found\n")

    def _sparql(self, method, path, query, accept, body, ctype):
        if path != "/sparql":
            return _text(404, "not found\n")
        text = None
        if method == "POST":
            base = (ctype or "").split(";")[0].strip().lower()
            if base == "application/sparql-query":
                text = body.decode("utf-8", "replace")
            elif base == "application/x-www-form-urlencoded":
                text = parse_qs(body.decode("utf-8", "replace")).get("query", [None])[0]
            else:
                return _text(400, "POST needs application/sparql-query or a form body\n")
        else:
            text = query.get("query", [None])[0]
        if not text:
            return _text(400, "missing query parameter\n")
        try:
            q = parse_sparql(text)
        except QueryError as e:
            return _text(400, f"{e}\n")
        rows = self._sorted[q.offset:]
        if q.limit is not None:
            rows = rows[: q.limit]
        if q.form == "CONSTRUCT":
            return _rdf(rows, accept)
        vars_ = list(q.variables)
        bindings = [{v: {"type": "uri", "value": term} for v, term in zip(vars_, t)} for t in rows]
        doc = {"head": {"vars": vars_}, "results": {"bindings": bindings}}
        return Response(200, SPARQL_RESULTS_JSON, json.dumps(doc).encode())


def render_rdfa_page(node: NodeSpec, triples) -> str:
    """HTML+RDFa: one ``div about=`` per subject, one ``a rel= href=`` per
    triple."""
    by_subject: dict[str, list] = {}
    for s, p, o in sorted(set(triples)):
        by_subject.setdefault(s, []).append((p, o))
    q = lambda x: html.escape(x, quote=True)  # noqa: E731
    out = ["<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n",
           f"<title>Dataset of {q(node.host)}</title>\n</head>\n<body>\n"]
    for s, pairs in by_subject.items():
        out.append(f'<div about="{q(s)}">\n')
        for p, o in pairs:
            out.append(f'  <a rel="{q(p)}" href="{q(o)}">{q(o)}</a>\n')
        out.append("</div>\n")
    out.append("</body>\n</html>\n")
    return "".join(out)


def render_ckan_index(node: NodeSpec, datasets) -> str:
    q = lambda x: html.escape(x, quote=True)  # noqa: E731
    items = "".join(f'<li><a href="{q(d["url"])}">{q(d["id"])}</a></li>\n' for d in datasets)
    return ("<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\">"
            f"<title>Catalogue {q(node.host)}</title></head>\n<body>\n"
            f"<h1>Datasets</h1>\n<ul>\n{items}</ul>\n</body>\n</html>\n")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "crawlbench-node"

    def _serve(self):
        app = self.server.app
        body = b""
        length = self.headers.get("Content-Length")
        if length:
            try:
                body = self.rfile.read(int(length))
            except ValueError:
                self.send_error(400, "bad Content-Length")
                return
        resp = app.handle(self.command, self.path, self.headers.get("Accept"), body,
                          self.headers.get("Content-Type"))
        self.send_response(resp.status)
        self.send_header("Content-Type", resp.content_type)
        self.send_header("Content-Length", str(len(resp.body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(resp.body)

    do_GET = do_HEAD = do_POST = do_PUT = do_DELETE = _serve

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)


class AppServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    request_queue_size = 64

    def __init__(self, app, port: int, host: str = "127.0.0.1", handler=_Handler):
        self.app = app
        super().__init__((host, port), handler)
        self.thread: threading.Thread | None = None

    def start(self) -> AppServer:
        self.thread = threading.Thread(target=self.serve_forever, kwargs={"poll_interval": 0.05},
                                       name=f"server-{self.server_address[1]}", daemon=True)
        self.thread.start()
        return self

    def stop(self):
        self.shutdown()
        self.server_close()


class Cloud:
    """All node servers of a manifest, listening on ``127.0.0.1:{port}``."""

    def __init__(self, manifest: CloudManifest, bind: str = "127.0.0.1"):
        self.manifest = manifest
        delay = manifest.config.crawl_delay
        self.apps = {n.id: NodeApp(n, manifest.per_node[n.id], delay) for n in manifest.nodes}
        self.bind = bind
        self.servers: list[AppServer] = []

    def start(self) -> Cloud:
        try:
            for node in self.manifest.nodes:
                self.servers.append(AppServer(self.apps[node.id], node.port, self.bind).start())
        except OSError:
            self.stop()
            raise
        return self

    def stop(self):
        threads = [threading.Thread(target=s.stop) for s in self.servers]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        self.servers = []

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def drain_request_logs(self) -> dict[int, list[RequestRecord]]:
        return {k: app.log.drain() for k, app in self.apps.items()}

    def hosts_mapping(self) -> dict[str, str]:
        """Virtual host name -> actual ``host:port`` when they differ."""
        out = {}
        for n in self.manifest.nodes:
            actual = f"{self.bind}:{n.port}"
            if n.host != actual:
                out[n.host] = actual
        return out
