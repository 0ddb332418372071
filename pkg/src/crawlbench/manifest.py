"""The generated cloud as a single value, and its on-disk form.

A manifest directory contains ``manifest.json`` (canonical JSON: sorted keys,
LF newlines) and ``expected/node-{k}.nt`` (sorted canonical N-Triples of the
triples node ``k`` must contribute to the sink).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import CloudConfig, ConnectivityMatrix, NodeSpec, NodeType, RdfGraph, WebGraph
from .rdfio import canonical_ntriples
from .streams import GENERATOR_ID

MANIFEST_FORMAT = "crawlbench-manifest/1"


@dataclass
class NodeData:
    """Everything generated for one node."""

    rdf: RdfGraph | None
    urls: list[str]
    entrance: str
    datasets: list[dict] = field(default_factory=list)

    @property
    def disallowed(self) -> list[str]:
        return self.rdf.disallowed if self.rdf else []

    def expected_triples(self) -> list:
        return self.rdf.expected_triples() if self.rdf else []

    def served_triples(self) -> list:
        return self.rdf.served_triples() if self.rdf else []

    def expected_ntriples(self) -> str:
        return canonical_ntriples(self.expected_triples())

    def to_dict(self) -> dict:
        return {
            "rdf": self.rdf.to_dict() if self.rdf else None,
            "urls": self.urls,
            "entrance": self.entrance,
            "datasets": self.datasets,
        }

    @classmethod
    def from_dict(cls, d) -> NodeData:
        rdf = RdfGraph.from_dict(d["rdf"]) if d.get("rdf") is not None else None
        return cls(rdf=rdf, urls=list(d["urls"]), entrance=d["entrance"],
                   datasets=[dict(x) for x in d.get("datasets", [])])


@dataclass
class CloudManifest:
    config: CloudConfig
    matrix: ConnectivityMatrix
    web_graph: WebGraph
    per_node: dict[int, NodeData]

    @property
    def nodes(self) -> list[NodeSpec]:
        return self.web_graph.nodes

    def seed_uris(self) -> list[str]:
        return [self.per_node[k].entrance for k in self.web_graph.seeds]

    def expected_total(self) -> int:
        return sum(len(set(nd.expected_triples())) for nd in self.per_node.values())

    def count(self, node_type: NodeType) -> int:
        return sum(1 for n in self.nodes if n.type is node_type)

    def to_dict(self) -> dict:
        g = self.web_graph
        return {
            "format": MANIFEST_FORMAT,
            "generator": GENERATOR_ID,
            "config": self.config.to_dict(),
            "connectivity": self.matrix.to_list(),
            "web_graph": {
                "nodes": [n.to_dict() for n in g.nodes],
                "edges": [list(e) for e in sorted(g.edges)],
                "seeds": list(g.seeds),
            },
            "per_node": {str(k): self.per_node[k].to_dict() for k in sorted(self.per_node)},
        }

    @classmethod
    def from_dict(cls, d) -> CloudManifest:
        if d.get("format") != MANIFEST_FORMAT:
            raise ValueError(f"unsupported manifest format {d.get('format')!r}")
        if d.get("generator") != GENERATOR_ID:
            raise ValueError(f"manifest was produced by generator {d.get('generator')!r}")
        wg = d["web_graph"]
        graph = WebGraph(
            nodes=[NodeSpec.from_dict(n) for n in wg["nodes"]],
            edges={(u, v) for u, v in wg["edges"]},
            seeds=list(wg["seeds"]),
        )
        return cls(
            config=CloudConfig.from_dict(d["config"]),
            matrix=ConnectivityMatrix(tuple(tuple(r) for r in d["connectivity"])),
            web_graph=graph,
            per_node={int(k): NodeData.from_dict(v) for k, v in d["per_node"].items()},
        )


def encode(manifest: CloudManifest) -> bytes:
    """Canonical, byte-stable JSON encoding."""
    text = json.dumps(manifest.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return (text + "\n").encode("ascii")


def decode(data: bytes) -> CloudManifest:
    return CloudManifest.from_dict(json.loads(data))


def write_manifest(manifest: CloudManifest, directory) -> Path:
    directory = Path(directory)
    (directory / "expected").mkdir(parents=True, exist_ok=True)
    (directory / "manifest.json").write_bytes(encode(manifest))
    for k, nd in sorted(manifest.per_node.items()):
        path = directory / "expected" / f"node-{k}.nt"
        path.write_bytes(nd.expected_ntriples().encode("utf-8"))
    return directory


def read_manifest(directory) -> CloudManifest:
    return decode((Path(directory) / "manifest.json").read_bytes())
