"""Domain types shared across the benchmark: node types, configuration,
the typed node graph, per-node RDF datasets and the run report."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Triple = tuple[str, str, str]


class NodeType(enum.Enum):
    DEREFERENCING = "Dereferencing"
    DUMP_FILE = "DumpFile"
    SPARQL = "Sparql"
    CKAN = "Ckan"
    RDFA = "Rdfa"

    @property
    def index(self) -> int:
        return NODE_TYPE_ORDER.index(self)

    @classmethod
    def parse(cls, value: str | NodeType) -> NodeType:
        if isinstance(value, NodeType):
            return value
        for t in cls:
            if value in (t.value, t.name) or value.lower() == t.value.lower():
                return t
        aliases = {"deref": cls.DEREFERENCING, "dump": cls.DUMP_FILE}
        try:
            return aliases[value.lower()]
        except KeyError:
            raise ValueError(f"unknown node type {value!r}") from None


# Fixed order: rows/columns of the connectivity matrix and the order in which
# the deterministic prefix of the node list is emitted.
NODE_TYPE_ORDER: tuple[NodeType, ...] = (
    NodeType.DEREFERENCING,
    NodeType.DUMP_FILE,
    NodeType.SPARQL,
    NodeType.CKAN,
    NodeType.RDFA,
)

RESOURCE_BEARING = frozenset(
    {NodeType.DEREFERENCING, NodeType.DUMP_FILE, NodeType.SPARQL, NodeType.RDFA}
)

DUMP_FORMAT_NAMES = ("RdfXml", "Turtle", "NTriples", "N3")


def exact(value) -> Fraction:
    """Exact rational for a user-facing number (``0.1`` means 1/10)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class CloudConfig:
    """All user parameters of one benchmark run.

    ``host_template`` is formatted with ``k`` (node id) and ``port``
    (``base_port + k``); the listener for node ``k`` always binds
    ``127.0.0.1:{base_port + k}``.
    """

    node_count: int = 100
    type_weights: Mapping[NodeType, float] = field(
        default_factory=lambda: {NodeType.DEREFERENCING: 1}
    )
    avg_node_degree: float = 20
    triples_per_graph: int = 1000
    avg_resource_degree: int = 9
    dump_compression_ratio: float = 0.0
    dump_formats_enabled: frozenset[str] = frozenset(DUMP_FORMAT_NAMES)
    disallowed_ratio: float = 0.0
    crawl_delay: float = 0.0
    seed: int = 0
    host_template: str = "127.0.0.1:{port}"
    base_port: int = 18000

    def __post_init__(self):
        weights = {NodeType.parse(k): v for k, v in dict(self.type_weights).items()}
        object.__setattr__(self, "type_weights", weights)
        object.__setattr__(self, "dump_formats_enabled", frozenset(self.dump_formats_enabled))
        self.validate()

    def validate(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if any(w < 0 for w in self.type_weights.values()):
            raise ValueError("type weights must be non-negative")
        if sum(self.type_weights.values()) <= 0:
            raise ValueError("at least one type weight must be positive")
        if self.avg_node_degree <= 0:
            raise ValueError("avg_node_degree must be positive")
        if self.triples_per_graph < 1:
            raise ValueError("triples_per_graph must be >= 1")
        if self.avg_resource_degree < 1:
            raise ValueError("avg_resource_degree must be >= 1")
        for name in ("dump_compression_ratio", "disallowed_ratio"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.crawl_delay < 0:
            raise ValueError("crawl_delay must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        unknown = self.dump_formats_enabled - set(DUMP_FORMAT_NAMES)
        if unknown:
            raise ValueError(f"unknown dump formats {sorted(unknown)}")
        if NodeType.DUMP_FILE in self.used_types and not self.dump_formats_enabled:
            raise ValueError("dump file nodes need at least one enabled format")

    @property
    def used_types(self) -> list[NodeType]:
        """Types with positive weight, in canonical order."""
        return [t for t in NODE_TYPE_ORDER if self.type_weights.get(t, 0) > 0]

    def host(self, k: int) -> str:
        return self.host_template.format(k=k, port=self.base_port + k)

    def with_(self, **changes) -> CloudConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "type_weights":
                value = {t.value: value[t] for t in NODE_TYPE_ORDER if t in value}
            elif f.name == "dump_formats_enabled":
                value = sorted(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> CloudConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**dict(data))


@dataclass(frozen=True)
class ConnectivityMatrix:
    """Which node-type pairs may be linked; ``allowed[i][j]`` covers edges
    from ``NODE_TYPE_ORDER[i]`` to ``NODE_TYPE_ORDER[j]``."""

    allowed: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(bool(x) for x in row) for row in self.allowed)
        n = len(NODE_TYPE_ORDER)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"connectivity matrix must be {n}x{n}")
        object.__setattr__(self, "allowed", rows)

    @classmethod
    def default(cls) -> ConnectivityMatrix:
        rows = [[True] * 5 for _ in range(5)]
        rows[NodeType.CKAN.index][NodeType.DEREFERENCING.index] = False
        return cls(tuple(map(tuple, rows)))

    def permits(self, source: NodeType, target: NodeType) -> bool:
        return self.allowed[source.index][target.index]

    def to_list(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.allowed]


@dataclass(frozen=True)
class NodeSpec:
    id: int
    type: NodeType
    host: str
    port: int
    dump_format: str | None = None
    compression: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "type": self.type.value,
            "host": self.host,
            "port": self.port,
            "dump_format": self.dump_format,
            "compression": self.compression,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> NodeSpec:
        return cls(d["id"], NodeType.parse(d["type"]), d["host"], d["port"],
                   d.get("dump_format"), d.get("compression"))


@dataclass
class WebGraph:
    nodes: list[NodeSpec]
    edges: set[tuple[int, int]] = field(default_factory=set)
    seeds: list[int] = field(default_factory=list)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for u, v in sorted(self.edges):
            adj[u].append(v)
        return adj

    def out_targets(self, u: int) -> list[int]:
        return sorted(v for (a, v) in self.edges if a == u)

    def in_degrees(self) -> list[int]:
        deg = [0] * len(self.nodes)
        for _, v in self.edges:
            deg[v] += 1
        return deg

    def average_degree(self) -> float:
        return 2 * len(self.edges) / len(self.nodes)

    def check_invariants(self, matrix: ConnectivityMatrix) -> None:
        types = [n.type for n in self.nodes]
        for u, v in self.edges:
            if u == v:
                raise AssertionError(f"self-loop on node {u}")
            if not matrix.permits(types[u], types[v]):
                raise AssertionError(f"edge {u}->{v} violates the connectivity matrix")
        if self.seeds and not check_crawlable(self, self.seeds):
            raise AssertionError("graph is not crawlable from its seeds")


@dataclass
class RdfGraph:
    """One node's dataset.

    ``internal_triples`` link resources of this graph, ``outgoing_triples``
    point at entrance IRIs of other nodes. ``pointer_triples`` and
    ``disallowed_triples`` only exist when robots-disallowed copies were
    injected: pointers are ordinary (expected) triples whose object is a
    copy, the copies' own triples are served but never expected.
    """

    resources: list[str]
    properties: list[str]
    externals: list[str] = field(default_factory=list)
    internal_triples: list[Triple] = field(default_factory=list)
    outgoing_triples: list[Triple] = field(default_factory=list)
    pointer_triples: list[Triple] = field(default_factory=list)
    disallowed_triples: list[Triple] = field(default_factory=list)
    disallowed: list[str] = field(default_factory=list)

    @property
    def entrance(self) -> str:
        return self.resources[0]

    @property
    def size(self) -> int:
        return len(self.internal_triples) + len(self.outgoing_triples)

    def expected_triples(self) -> list[Triple]:
        return self.internal_triples + self.outgoing_triples + self.pointer_triples

    def served_triples(self) -> list[Triple]:
        return self.expected_triples() + self.disallowed_triples

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {r: [] for r in self.resources}
        for s, _, o in self.internal_triples:
            adj[s].append(o)
        return adj

    def to_dict(self) -> dict:
        return {
            "resources": self.resources,
            "properties": self.properties,
            "externals": self.externals,
            "internal_triples": [list(t) for t in self.internal_triples],
            "outgoing_triples": [list(t) for t in self.outgoing_triples],
            "pointer_triples": [list(t) for t in self.pointer_triples],
            "disallowed_triples": [list(t) for t in self.disallowed_triples],
            "disallowed": self.disallowed,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> RdfGraph:
        def triples(key):
            return [tuple(t) for t in d.get(key, [])]

        return cls(
            resources=list(d["resources"]),
            properties=list(d["properties"]),
            externals=list(d.get("externals", [])),
            internal_triples=triples("internal_triples"),
            outgoing_triples=triples("outgoing_triples"),
            pointer_triples=triples("pointer_triples"),
            disallowed_triples=triples("disallowed_triples"),
            disallowed=list(d.get("disallowed", [])),
        )


@dataclass
class RunReport:
    recall_per_node: dict[int, Fraction]
    micro_recall: Fraction
    macro_recall: Fraction
    true_positives: int
    expected_total: int
    runtime_seconds: float
    triples_over_time: list[tuple[float, int]]
    rdr: Fraction | None
    cdf_min: Fraction | None
    cdf_max: Fraction | None
    cdf_avg: Fraction | None
    config: dict
    seed: int
    disallowed_total: int = 0
    disallowed_requested: int = 0
    timed_out: bool = False
    crawler_exit_code: int | None = None
    started_at: str | None = None
    finished_at: str | None = None

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None else float(x)

        return {
            "config": self.config,
            "seed": self.seed,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "timed_out": self.timed_out,
            "crawler_exit_code": self.crawler_exit_code,
            "recall": {
                "micro": num(self.micro_recall),
                "macro": num(self.macro_recall),
                "true_positives": self.true_positives,
                "expected_total": self.expected_total,
                "per_node": {str(k): num(v) for k, v in sorted(self.recall_per_node.items())},
            },
            "runtime_seconds": self.runtime_seconds,
            "triples_over_time": [[t, c] for t, c in self.triples_over_time],
            "robots": {
                "rdr": num(self.rdr),
                "disallowed_total": self.disallowed_total,
                "disallowed_requested": self.disallowed_requested,
                "cdf_min": num(self.cdf_min),
                "cdf_max": num(self.cdf_max),
                "cdf_avg": num(self.cdf_avg),
            },
        }

    def summary(self) -> str:
        def fmt(x, digits=3):
            return "n/a" if x is None else f"{float(x):.{digits}f}"

        lines = [
            f"seed              {self.seed}",
            f"micro recall      {fmt(self.micro_recall, 4)}  ({self.true_positives}/{self.expected_total})",
            f"macro recall      {fmt(self.macro_recall, 4)}",
            f"runtime           {self.runtime_seconds:.2f} s",
            f"RDR               {fmt(self.rdr)}  ({self.disallowed_requested}/{self.disallowed_total} disallowed requested)",
            f"CDF min/max/avg   {fmt(self.cdf_min)} / {fmt(self.cdf_max)} / {fmt(self.cdf_avg)}",
        ]
        if self.timed_out:
            lines.append("crawler TIMED OUT; KPIs computed on the partial sink")
        if self.crawler_exit_code not in (None, 0):
            lines.append(f"crawler exit code {self.crawler_exit_code}")
        return "\n".join(lines) + "\n"


def _adjacency(graph) -> Mapping:
    if isinstance(graph, (WebGraph, RdfGraph)):
        return graph.adjacency()
    return graph


def reachable(graph, seeds: Iterable) -> set:
    """Nodes reachable from ``seeds`` following edge direction."""
    adj = _adjacency(graph)
    seen = set()
    queue = deque()
    for s in seeds:
        if s not in adj:
            raise ValueError(f"seed not in graph: {s!r}")
        if s not in seen:
            seen.add(s)
            queue.append(s)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def check_crawlable(graph, seeds: Sequence) -> bool:
    """True iff every node of ``graph`` is reachable from ``seeds``.

    ``graph`` is a :class:`WebGraph`, an :class:`RdfGraph` (internal triples
    as edges) or a plain ``{node: successors}`` mapping.
    """
    adj = _adjacency(graph)
    return len(reachable(adj, seeds)) == len(adj)
