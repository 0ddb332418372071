"""Reference Data Web crawler.

Handles every node type the cloud serves: dereferenceable resources (with
content negotiation), compressed and uncompressed dump files, SPARQL
endpoints (paged CONSTRUCT), CKAN-style catalogues and HTML pages with RDFa.
Politeness is per host: robots.txt first, then at most one request in
flight and, when asked, at least ``Crawl-delay`` seconds between the end of
one response and the next request.

The RDFa reader only understands the ``about``/``rel``/``href`` pattern the
benchmark pages use.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import urllib.error
import urllib.request
from collections import deque
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import quote, urldefrag, urljoin, urlsplit, urlunsplit
from urllib.robotparser import RobotFileParser

from .rdfio import (
    Compression,
    CompressionError,
    RdfFormat,
    RdfParseError,
    decompress_named,
    parse,
    serialize,
)

log = logging.getLogger(__name__)

USER_AGENT = "crawlbench-ref/1"
ACCEPT = "text/turtle, application/n-triples;q=0.9, application/rdf+xml;q=0.8, text/n3;q=0.7"
CKAN_LIST = "/api/3/action/package_list"
CKAN_SHOW = "/api/3/action/package_show"


@dataclass
class CrawlOptions:
    obey_disallow: bool = True
    obey_delay: bool = True
    workers: int = 4
    strategy: str = "lbs"  # "lbs": per-host round robin, "bfs": global FIFO
    sparql_page_size: int = 500
    request_timeout: float = 30.0
    retries: int = 2
    hosts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.strategy not in ("lbs", "bfs"):
            raise ValueError("strategy must be 'lbs' or 'bfs'")


@dataclass
class Task:
    url: str
    kind: str = "get"  # get | robots | sparql | ckan_list | ckan_show
    offset: int = 0


@dataclass
class _Host:
    name: str
    queue: deque = field(default_factory=deque)
    busy: bool = False
    ready_at: float = 0.0
    delay: float = 0.0
    robots: RobotFileParser | None = None
    sparql: bool = False


@dataclass
class CrawlStats:
    fetched: int = 0
    failed: list[str] = field(default_factory=list)
    skipped_disallowed: int = 0
    triples_posted: int = 0


class _RdfaExtractor(HTMLParser):
    def __init__(self, base: str):
        super().__init__(convert_charrefs=True)
        self.base = base
        self.subjects: list[str | None] = []
        self.triples: set = set()
        self.links: list[str] = []

    def handle_starttag(self, tag, attrs):
        a = dict(attrs)
        current = next((s for s in reversed(self.subjects) if s), None)
        about = a.get("about")
        if about is not None:
            current = urljoin(self.base, about)
        href = a.get("href")
        if href is not None:
            target = urljoin(self.base, href)
            self.links.append(target)
            rel = a.get("rel")
            if rel and current:
                for p in rel.split():
                    if ":" in p and "//" in p:
                        self.triples.add((current, p, target))
        if tag not in ("a", "meta", "link", "br", "img", "hr", "input"):
            self.subjects.append(about and current)

    def handle_endtag(self, tag):
        if tag not in ("a", "meta", "link", "br", "img", "hr", "input") and self.subjects:
            self.subjects.pop()


def extract_rdfa(html_text: str, base: str) -> tuple[set, list[str]]:
    """Triples and plain links of an HTML+RDFa page."""
    p = _RdfaExtractor(base)
    p.feed(html_text)
    p.close()
    return p.triples, p.links


def robots_crawl_delay(text: str, agent: str) -> float:
    """Crawl-delay for ``agent`` in seconds, fractional values included
    (``RobotFileParser`` only understands integers)."""
    token = agent.split("/")[0].lower()
    specific = default = None
    agents: list[str] = []
    in_rules = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if ":" not in line:
            continue
        key, value = (x.strip() for x in line.split(":", 1))
        key = key.lower()
        if key == "user-agent":
            if in_rules:
                agents, in_rules = [], False
            agents.append(value.lower())
            continue
        in_rules = True
        if key != "crawl-delay":
            continue
        try:
            delay = float(value)
        except ValueError:
            continue
        if any(a != "*" and a in token for a in agents):
            specific = delay
        elif "*" in agents and default is None:
            default = delay
    found = specific if specific is not None else default
    return max(found, 0.0) if found is not None else 0.0


def _strip_fragment(url: str) -> str:
    return urldefrag(url)[0]


def _sparql_url(endpoint: str, limit: int, offset: int) -> str:
    q = f"CONSTRUCT {{ ?s ?p ?o }} WHERE {{ ?s ?p ?o }} LIMIT {limit} OFFSET {offset}"
    return f"{endpoint}?query={quote(q)}"


def _format_from_name(name: str) -> RdfFormat | None:
    for c in Compression:
        if c.extension and name.endswith(c.extension):
            name = name[: -len(c.extension)]
    for f in RdfFormat:
        if name.endswith(f.extension):
            return f
    return None


def _compression_of(ctype: str, path: str) -> Compression:
    for c in Compression:
        if c.media_type and ctype == c.media_type:
            return c
    for c in Compression:
        if c.extension and path.endswith(c.extension):
            return c
    return Compression.NONE


class Crawler:
    def __init__(self, sink_url: str, options: CrawlOptions | None = None):
        self.sink_url = sink_url
        self.opt = options or CrawlOptions()
        self.stats = CrawlStats()
        self._cond = threading.Condition()
        self._hosts: dict[str, _Host] = {}
        self._order: list[str] = []
        self._rr = 0
        self._global: deque = deque()
        self._seen: set[str] = set()
        self._in_flight = 0
        self._stop = threading.Event()
        self._opener = urllib.request.build_opener(urllib.request.ProxyHandler({}))

    # -- frontier ---------------------------------------------------------

    def stop(self):
        self._stop.set()
        with self._cond:
            self._cond.notify_all()

    def _host(self, netloc: str) -> _Host:
        h = self._hosts.get(netloc)
        if h is None:
            h = self._hosts[netloc] = _Host(netloc)
            self._order.append(netloc)
            if self.opt.obey_disallow or self.opt.obey_delay:
                self._push(h, Task(f"http://{netloc}/robots.txt", "robots"))
        return h

    def _push(self, host: _Host, task: Task):
        host.queue.append(task)
        if self.opt.strategy == "bfs":
            self._global.append((host.name, task))

    def enqueue(self, url: str, kind: str = "get", offset: int = 0) -> bool:
        """Add ``url`` to the frontier unless it was seen before."""
        url = _strip_fragment(url)
        parts = urlsplit(url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            return False
        if kind == "get" and parts.path.endswith("/sparql") and not parts.query:
            kind = "sparql"
            url = _sparql_url(url, self.opt.sparql_page_size, 0)
        with self._cond:
            if url in self._seen:
                return False
            host = self._host(parts.netloc)
            if kind == "sparql":
                host.sparql = True
            elif host.sparql and kind == "get":
                # resources of a store are harvested through its endpoint
                return False
            self._seen.add(url)
            self._push(host, Task(url, kind, offset))
            self._cond.notify_all()
        return True

    def _allowed(self, host: _Host, task: Task) -> bool:
        if not self.opt.obey_disallow or task.kind == "robots" or host.robots is None:
            return True
        return host.robots.can_fetch(USER_AGENT, task.url)

    def _ready(self, host: _Host, now: float) -> bool:
        return not host.busy and host.ready_at <= now

    def _pick(self, now: float) -> tuple[_Host, Task] | None:
        if self.opt.strategy == "bfs":
            for i, (name, task) in enumerate(self._global):
                host = self._hosts[name]
                if self._ready(host, now):
                    del self._global[i]
                    host.queue.remove(task)
                    return host, task
            return None
        n = len(self._order)
        for step in range(n):
            idx = (self._rr + step) % n
            host = self._hosts[self._order[idx]]
            if host.queue and self._ready(host, now):
                self._rr = idx + 1
                return host, host.queue.popleft()
        return None

    def _next_wakeup(self, now: float) -> float | None:
        waits = [h.ready_at - now for h in self._hosts.values()
                 if h.queue and not h.busy and h.ready_at > now]
        return min(waits) if waits else None

    def _pending(self) -> bool:
        return any(h.queue for h in self._hosts.values())

    # -- workers ----------------------------------------------------------

    def crawl(self, seeds) -> int:
        """Crawl from ``seeds`` until the frontier is exhausted; returns the
        process exit status (0 even when some fetches failed)."""
        for s in seeds:
            self.enqueue(s)
        threads = [threading.Thread(target=self._work, name=f"crawler-{i}", daemon=True)
                   for i in range(self.opt.workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        return 0

    def _work(self):
        while True:
            with self._cond:
                while True:
                    if self._stop.is_set():
                        return
                    now = time.monotonic()
                    picked = self._pick(now)
                    if picked:
                        host, task = picked
                        if not self._allowed(host, task):
                            self.stats.skipped_disallowed += 1
                            continue
                        host.busy = True
                        self._in_flight += 1
                        break
                    if self._in_flight == 0 and not self._pending():
                        self._cond.notify_all()
                        return
                    self._cond.wait(self._next_wakeup(now))
            try:
                self._process(host, task)
            except Exception:  # a bad document must not kill the worker
                log.exception("processing %s failed", task.url)
                self.stats.failed.append(task.url)
            finally:
                with self._cond:
                    host.busy = False
                    self._in_flight -= 1
                    self._cond.notify_all()

    # -- HTTP -------------------------------------------------------------

    def _open(self, url: str, data: bytes | None = None, headers=None):
        parts = urlsplit(url)
        headers = dict(headers or {})
        headers.setdefault("User-Agent", USER_AGENT)
        actual = self.opt.hosts.get(parts.netloc)
        if actual:
            headers["Host"] = parts.netloc
            url = urlunsplit(parts._replace(netloc=actual))
        req = urllib.request.Request(url, data=data, headers=headers)
        return self._opener.open(req, timeout=self.opt.request_timeout)

    def _fetch(self, host: _Host, url: str, accept: str) -> tuple[int, str, bytes] | None:
        """GET with retries on network errors and 5xx; ``None`` on failure.

        Sets the host's next allowed request time as soon as the response
        is in.
        """
        for attempt in range(self.opt.retries + 1):
            try:
                try:
                    with self._open(url, headers={"Accept": accept}) as resp:
                        status, ctype, body = resp.status, resp.headers.get("Content-Type", ""), resp.read()
                except urllib.error.HTTPError as e:
                    status, ctype, body = e.code, e.headers.get("Content-Type", ""), e.read()
            except (urllib.error.URLError, OSError) as e:
                log.debug("fetch %s failed: %s", url, e)
                status = None
            self._mark_done(host)
            if status is not None and status < 500:
                return status, ctype.split(";")[0].strip().lower(), body
            if attempt < self.opt.retries:
                self._wait_turn(host)
        self.stats.failed.append(url)
        return None

    def _mark_done(self, host: _Host):
        with self._cond:
            host.ready_at = time.monotonic() + (host.delay if self.opt.obey_delay else 0.0)
            self.stats.fetched += 1

    def _wait_turn(self, host: _Host):
        while not self._stop.is_set():
            wait = host.ready_at - time.monotonic()
            if wait <= 0:
                return
            time.sleep(wait)

    def _post(self, triples, graph: str):
        if not triples:
            return
        body = serialize(sorted(triples), RdfFormat.NTRIPLES)
        url = f"{self.sink_url}?graph={quote(graph, safe='')}"
        for attempt in range(self.opt.retries + 1):
            try:
                with self._open(url, data=body,
                                headers={"Content-Type": RdfFormat.NTRIPLES.media_type}) as resp:
                    resp.read()
                self.stats.triples_posted += len(triples)
                return
            except (urllib.error.URLError, OSError) as e:
                log.warning("posting to sink failed (%s), attempt %d", e, attempt + 1)
        self.stats.failed.append("sink:" + graph)

    # -- processing -------------------------------------------------------

    def _process(self, host: _Host, task: Task):
        if task.kind == "robots":
            got = self._fetch(host, task.url, "text/plain")
            text = got[2].decode("utf-8", "replace") if got and got[0] == 200 else ""
            rp = RobotFileParser()
            rp.parse(text.splitlines())
            with self._cond:
                host.robots = rp
                host.delay = robots_crawl_delay(text, USER_AGENT)
                if self.opt.obey_delay:
                    host.ready_at = time.monotonic() + host.delay
            return
        accept = "application/json" if task.kind.startswith("ckan") else ACCEPT
        if task.kind == "sparql":
            accept = RdfFormat.NTRIPLES.media_type
        got = self._fetch(host, task.url, accept)
        if got is None:
            return
        status, ctype, body = got
        if status != 200:
            log.debug("%s -> %s", task.url, status)
            return
        if task.kind == "ckan_list":
            self._ckan_list(task.url, body)
        elif task.kind == "ckan_show":
            self._ckan_show(body)
        elif task.kind == "sparql":
            triples = self._rdf(body, ctype, task.url)
            self._emit(triples, task.url)
            if len(triples) >= self.opt.sparql_page_size:
                nxt = task.offset + self.opt.sparql_page_size
                endpoint = task.url.split("?", 1)[0]
                self.enqueue(_sparql_url(endpoint, self.opt.sparql_page_size, nxt), "sparql", nxt)
        elif ctype.startswith("text/html") or ctype == "application/xhtml+xml":
            triples, links = extract_rdfa(body.decode("utf-8", "replace"), task.url)
            self._emit(triples, task.url)
            for link in links:
                self.enqueue(link)
            if urlsplit(task.url).path in ("", "/"):
                self.enqueue(urljoin(task.url, CKAN_LIST), "ckan_list")
        else:
            self._emit(self._rdf(body, ctype, task.url), task.url)

    def _rdf(self, body: bytes, ctype: str, url: str) -> set:
        path = urlsplit(url).path
        codec = _compression_of(ctype, path)
        try:
            payload, inner = decompress_named(body, codec)
        except CompressionError as e:
            log.warning("%s: %s", url, e)
            return set()
        fmt = RdfFormat.from_media_type(ctype)
        if fmt is None:
            fmt = _format_from_name(inner or path)
        if fmt is None:
            log.debug("%s: no RDF in %s", url, ctype)
            return set()
        try:
            return parse(payload, fmt)
        except RdfParseError as e:
            log.warning("%s: %s", url, e)
            return set()

    def _emit(self, triples, source: str):
        self._post(triples, source)
        for s, _, o in triples:
            self.enqueue(s)
            self.enqueue(o)

    def _ckan_list(self, url: str, body: bytes):
        try:
            doc = json.loads(body)
        except ValueError:
            return
        if not isinstance(doc, dict) or not doc.get("success"):
            return
        for pkg in doc.get("result") or []:
            self.enqueue(urljoin(url, f"{CKAN_SHOW}?id={quote(str(pkg))}"), "ckan_show")

    def _ckan_show(self, body: bytes):
        try:
            doc = json.loads(body)
        except ValueError:
            return
        for res in ((doc.get("result") or {}).get("resources") or []):
            if res.get("url"):
                self.enqueue(res["url"])


def read_seeds(path) -> list[str]:
    return [line.strip() for line in Path(path).read_text().splitlines()
            if line.strip() and not line.startswith("#")]


def read_hosts(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            virtual, actual = line.split()
            out[virtual] = actual
    return out


def crawl(seeds, sink_url: str, options: CrawlOptions | None = None) -> int:
    return Crawler(sink_url, options).crawl(seeds)
