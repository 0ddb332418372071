"""RDF serialization, parsing, compression and content negotiation.

Only IRI triples are supported (no literals, no blank nodes), which is all
the generated clouds contain. The RDF/XML writer emits one
``rdf:Description`` per subject and the reader understands that shape plus
typed node elements, nested descriptions and ``rdf:resource`` property
elements; it is not a general RDF/XML parser.
"""

from __future__ import annotations

import bz2
import enum
import gzip
import io
import re
import zipfile
from collections import OrderedDict
from typing import Iterable
from xml.etree import ElementTree as ET
from xml.sax.saxutils import quoteattr

from .model import Triple


class RdfFormat(enum.Enum):
    NTRIPLES = ("NTriples", "application/n-triples", ".nt")
    TURTLE = ("Turtle", "text/turtle", ".ttl")
    RDFXML = ("RdfXml", "application/rdf+xml", ".rdf")
    N3 = ("N3", "text/n3", ".n3")

    def __init__(self, label, media_type, extension):
        self.label = label
        self.media_type = media_type
        self.extension = extension

    @classmethod
    def parse(cls, value: str | RdfFormat) -> RdfFormat:
        if isinstance(value, RdfFormat):
            return value
        for f in cls:
            if value in (f.label, f.name, f.media_type, f.extension):
                return f
        raise ValueError(f"unknown RDF format {value!r}")

    @classmethod
    def from_media_type(cls, media_type: str) -> RdfFormat | None:
        base = media_type.split(";")[0].strip().lower()
        for f in cls:
            if f.media_type == base:
                return f
        return None


class Compression(enum.Enum):
    NONE = ("None", "", None)
    ZIP = ("Zip", ".zip", "application/zip")
    GZIP = ("Gzip", ".gz", "application/gzip")
    BZIP2 = ("Bzip2", ".bz2", "application/x-bzip2")

    def __init__(self, label, extension, media_type):
        self.label = label
        self.extension = extension
        self.media_type = media_type

    @classmethod
    def parse(cls, value: str | Compression | None) -> Compression:
        if value is None:
            return cls.NONE
        if isinstance(value, Compression):
            return value
        for c in cls:
            if value in (c.label, c.name) or (c.extension and value == c.extension):
                return c
        raise ValueError(f"unknown compression {value!r}")


# Server preference when q-values tie.
PREFERENCE = (RdfFormat.TURTLE, RdfFormat.NTRIPLES, RdfFormat.RDFXML, RdfFormat.N3)

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDF_TYPE = RDF_NS + "type"


class RdfParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class NotAcceptable(Exception):
    """No supported RDF serialization is acceptable to the client."""


class CompressionError(ValueError):
    pass


def canonical_line(t: Triple) -> str:
    s, p, o = t
    return f"<{s}> <{p}> <{o}> ."


def canonical_ntriples(triples: Iterable[Triple]) -> str:
    """Sorted, deduplicated N-Triples with a trailing newline (empty string
    for no triples)."""
    lines = sorted({canonical_line(t) for t in triples})
    return "".join(line + "\n" for line in lines)


# -- serialization ------------------------------------------------------------

def serialize(triples: Iterable[Triple], fmt: RdfFormat | str) -> bytes:
    fmt = RdfFormat.parse(fmt)
    triples = list(triples)
    for t in triples:
        for term in t:
            _check_iri(term)
    if fmt is RdfFormat.NTRIPLES:
        text = "".join(canonical_line(t) + "\n" for t in triples)
    elif fmt in (RdfFormat.TURTLE, RdfFormat.N3):
        text = _write_turtle(triples)
    else:
        text = _write_rdfxml(triples)
    return text.encode("utf-8")


_BAD_IRI_CHARS = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def _check_iri(iri: str) -> None:
    if not iri or _BAD_IRI_CHARS.search(iri):
        raise ValueError(f"not a serializable IRI: {iri!r}")


def _group_by_subject(triples):
    groups: OrderedDict[str, list[tuple[str, str]]] = OrderedDict()
    for s, p, o in triples:
        groups.setdefault(s, []).append((p, o))
    return groups


def _write_turtle(triples) -> str:
    out = []
    for s, pairs in _group_by_subject(triples).items():
        body = " ;\n    ".join(f"<{p}> <{o}>" for p, o in pairs)
        out.append(f"<{s}> {body} .\n")
    return "".join(out)


_NCNAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*$")


def _split_predicate(iri: str) -> tuple[str, str]:
    for i in range(len(iri) - 1, -1, -1):
        if iri[i] in "/#":
            local = iri[i + 1:]
            if _NCNAME.match(local):
                return iri[: i + 1], local
            break
    m = re.search(r"[A-Za-z_][A-Za-z0-9_.\-]*$", iri)
    if not m:
        raise ValueError(f"cannot express predicate {iri!r} as an XML QName")
    return iri[: m.start()], m.group(0)


def _write_rdfxml(triples) -> str:
    namespaces: dict[str, str] = {}
    groups = _group_by_subject(triples)
    for pairs in groups.values():
        for p, _ in pairs:
            ns, _local = _split_predicate(p)
            if ns not in namespaces:
                namespaces[ns] = f"ns{len(namespaces)}"
    decl = "".join(f"\n    xmlns:{prefix}={quoteattr(ns)}" for ns, prefix in namespaces.items())
    out = ['<?xml version="1.0" encoding="utf-8"?>\n',
           f'<rdf:RDF xmlns:rdf="{RDF_NS}"{decl}>\n']
    for s, pairs in groups.items():
        out.append(f"  <rdf:Description rdf:about={quoteattr(s)}>\n")
        for p, o in pairs:
            ns, local = _split_predicate(p)
            out.append(f"    <{namespaces[ns]}:{local} rdf:resource={quoteattr(o)}/>\n")
        out.append("  </rdf:Description>\n")
    out.append("</rdf:RDF>\n")
    return "".join(out)


# -- parsing ------------------------------------------------------------------

def parse(data: bytes, fmt: RdfFormat | str) -> set[Triple]:
    """Triple set of ``data``; raises :class:`RdfParseError` on malformed input."""
    fmt = RdfFormat.parse(fmt)
    if fmt is RdfFormat.NTRIPLES:
        return _parse_ntriples(data)
    if fmt in (RdfFormat.TURTLE, RdfFormat.N3):
        return _TurtleParser(data).parse()
    return _parse_rdfxml(data)


_UCHAR = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")


def _unescape_iri(raw: str) -> str:
    if "\\" not in raw:
        return raw
    return _UCHAR.sub(lambda m: chr(int(m.group(1) or m.group(2), 16)), raw)


_NT_IRI = r"<((?:[^\x00-\x20<>\"{}|^`\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)>"
_NT_LINE = re.compile(rf"[ \t]*{_NT_IRI}[ \t]*{_NT_IRI}[ \t]*{_NT_IRI}[ \t]*\.[ \t]*(?:#.*)?$")
_NT_SKIP = re.compile(r"[ \t]*(?:#.*)?$")


def _parse_ntriples(data: bytes) -> set[Triple]:
    out = set()
    offset = 0
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise RdfParseError("invalid UTF-8", e.start) from None
    for line in text.splitlines(keepends=True):
        stripped = line.rstrip("\r\n")
        m = _NT_LINE.match(stripped)
        if m:
            out.add(tuple(_unescape_iri(g) for g in m.groups()))
        elif not _NT_SKIP.match(stripped):
            raise RdfParseError("malformed N-Triples line", offset)
        offset += len(line.encode("utf-8"))
    return out


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<directive>@prefix|@base|(?i:PREFIX)(?=\s)|(?i:BASE)(?=\s))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_.\-]*)?:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?|(?:[A-Za-z][A-Za-z0-9_.\-]*)?:)
  | (?P<a>a(?=[\s<]))
  | (?P<punct>[.;,\[\]])
    """,
    re.VERBOSE,
)


class _TurtleParser:
    """Turtle/N3 subset: IRIs, prefixed names, ``a``, ``;`` and ``,`` lists,
    ``@prefix``/``PREFIX`` and ``@base``/``BASE``."""

    def __init__(self, data: bytes):
        try:
            self.text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise RdfParseError("invalid UTF-8", e.start) from None
        self.tokens = list(self._tokenize())
        self.pos = 0
        self.prefixes: dict[str, str] = {}
        self.base = ""

    def _byte_offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def _tokenize(self):
        i = 0
        n = len(self.text)
        while i < n:
            m = _TOKEN.match(self.text, i)
            if not m:
                raise RdfParseError("unexpected character", self._byte_offset(i))
            kind = m.lastgroup
            if kind != "ws":
                yield kind, m.group(0), i
            i = m.end()

    def _peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return ("eof", "", len(self.text))

    def _next(self, *kinds):
        tok = self._peek()
        if kinds and tok[0] not in kinds and tok[1] not in kinds:
            raise RdfParseError(f"expected {' or '.join(kinds)}, got {tok[1]!r}",
                                self._byte_offset(tok[2]))
        self.pos += 1
        return tok

    def _resolve(self, tok) -> str:
        kind, value, pos = tok
        if kind == "iri":
            iri = _unescape_iri(value[1:-1])
            if self.base and not re.match(r"[A-Za-z][A-Za-z0-9+.\-]*:", iri):
                iri = self.base + iri
            return iri
        if kind == "pname":
            prefix, _, local = value.partition(":")
            if prefix not in self.prefixes:
                raise RdfParseError(f"undeclared prefix {prefix!r}", self._byte_offset(pos))
            return self.prefixes[prefix] + local
        if kind == "a":
            return RDF_TYPE
        raise RdfParseError(f"expected an IRI, got {value!r}", self._byte_offset(pos))

    def parse(self) -> set[Triple]:
        out: set[Triple] = set()
        while self._peek()[0] != "eof":
            kind, value, _ = self._peek()
            if kind == "directive":
                self._directive()
                continue
            subject = self._resolve(self._next())
            self._predicate_object_list(subject, out)
            self._next(".")
        return out

    def _directive(self):
        _, word, _ = self._next()
        sparql_style = not word.startswith("@")
        if word.lower().endswith("prefix"):
            _, pname, pos = self._next("pname")
            if not pname.endswith(":"):
                raise RdfParseError("prefix name must end with ':'", self._byte_offset(pos))
            self.prefixes[pname[:-1]] = self._resolve(self._next("iri"))
        else:
            self.base = self._resolve(self._next("iri"))
        if not sparql_style:
            self._next(".")

    def _predicate_object_list(self, subject: str, out: set):
        while True:
            predicate = self._resolve(self._next())
            while True:
                obj = self._resolve(self._next())
                out.add((subject, predicate, obj))
                if self._peek()[1] != ",":
                    break
                self._next(",")
            if self._peek()[1] != ";":
                return
            while self._peek()[1] == ";":
                self._next(";")
            if self._peek()[1] in (".", "]"):
                return


def _parse_rdfxml(data: bytes) -> set[Triple]:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        line, col = e.position
        lines = data.split(b"\n")
        offset = sum(len(x) + 1 for x in lines[: line - 1]) + col
        raise RdfParseError(f"malformed XML ({e})", offset) from None
    rdf = "{%s}" % RDF_NS
    if root.tag != rdf + "RDF":
        raise RdfParseError("document element is not rdf:RDF", 0)
    out: set[Triple] = set()
    for node in root:
        _rdfxml_node(node, out, rdf)
    return out


def _expand(tag: str) -> str:
    if not tag.startswith("{"):
        raise RdfParseError(f"element {tag!r} has no namespace", 0)
    ns, local = tag[1:].split("}", 1)
    return ns + local


def _rdfxml_node(node, out: set, rdf: str) -> str:
    subject = node.get(rdf + "about")
    if subject is None:
        raise RdfParseError("node element without rdf:about (blank nodes are unsupported)", 0)
    if node.tag != rdf + "Description":
        out.add((subject, RDF_TYPE, _expand(node.tag)))
    for attr, value in node.attrib.items():
        if attr == rdf + "type":
            out.add((subject, RDF_TYPE, value))
        elif attr != rdf + "about":
            raise RdfParseError("property attributes denote literals, which are unsupported", 0)
    for prop in node:
        predicate = _expand(prop.tag)
        obj = prop.get(rdf + "resource")
        if obj is not None:
            out.add((subject, predicate, obj))
            continue
        children = list(prop)
        if len(children) != 1:
            raise RdfParseError("property element needs rdf:resource or one node element", 0)
        out.add((subject, predicate, _rdfxml_node(children[0], out, rdf)))
    return subject


# -- compression --------------------------------------------------------------

def compress(data: bytes, c: Compression | str | None, inner_name: str = "dump") -> bytes:
    """Compress ``data``. ZIP archives hold one entry named ``inner_name``.

    Output is deterministic: gzip and zip headers carry fixed timestamps.
    """
    c = Compression.parse(c)
    if c is Compression.NONE:
        return data
    if c is Compression.GZIP:
        return gzip.compress(data, mtime=0)
    if c is Compression.BZIP2:
        return bz2.compress(data)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo(inner_name, date_time=(1980, 1, 1, 0, 0, 0))
        info.compress_type = zipfile.ZIP_DEFLATED
        zf.writestr(info, data)
    return buf.getvalue()


def decompress(data: bytes, c: Compression | str | None) -> bytes:
    return decompress_named(data, c)[0]


def decompress_named(data: bytes, c: Compression | str | None) -> tuple[bytes, str | None]:
    """Decompressed payload plus the ZIP entry name (``None`` for other codecs)."""
    c = Compression.parse(c)
    try:
        if c is Compression.NONE:
            return data, None
        if c is Compression.GZIP:
            return gzip.decompress(data), None
        if c is Compression.BZIP2:
            return bz2.decompress(data), None
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            names = zf.namelist()
            if len(names) != 1:
                raise CompressionError(f"expected one ZIP entry, found {len(names)}")
            return zf.read(names[0]), names[0]
    except (OSError, EOFError, ValueError, zipfile.BadZipFile) as e:
        if isinstance(e, CompressionError):
            raise
        raise CompressionError(f"corrupt {c.label} payload: {e}") from None


# -- content negotiation ------------------------------------------------------

def parse_accept(header: str) -> list[tuple[str, float]]:
    """``(media_range, q)`` pairs of an Accept header; malformed q counts as 0."""
    ranges = []
    for part in header.split(","):
        part = part.strip()
        if not part:
            continue
        media, *params = [x.strip() for x in part.split(";")]
        q = 1.0
        for param in params:
            key, _, value = param.partition("=")
            if key.strip().lower() == "q":
                try:
                    q = float(value.strip())
                except ValueError:
                    q = 0.0
                q = min(max(q, 0.0), 1.0)
        ranges.append((media.lower(), q))
    return ranges


def _match_specificity(media_range: str, media_type: str) -> int:
    if media_range == media_type:
        return 3
    if media_range == "*/*":
        return 1
    main, _, sub = media_range.partition("/")
    if sub == "*" and media_type.split("/")[0] == main:
        return 2
    return 0


def negotiate(accept_header: str | None) -> RdfFormat:
    """Pick the RDF format for a response.

    The q-value of a format comes from the most specific matching media
    range. Highest q wins, ties go to :data:`PREFERENCE` order. A missing or
    empty header means Turtle. Raises :class:`NotAcceptable` when no
    supported format has q > 0.
    """
    if accept_header is None or not accept_header.strip():
        return RdfFormat.TURTLE
    ranges = parse_accept(accept_header)
    best, best_q = None, 0.0
    for fmt in PREFERENCE:
        specificity, q = 0, 0.0
        for media_range, rq in ranges:
            s = _match_specificity(media_range, fmt.media_type)
            if s > specificity or (s == specificity and s and rq > q):
                specificity, q = s, rq
        if q > best_q:
            best, best_q = fmt, q
    if best is None:
        raise NotAcceptable(accept_header)
    return best
