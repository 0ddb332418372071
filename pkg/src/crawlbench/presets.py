"""Ready-made cloud configurations for the three standard experiments."""

from __future__ import annotations

from .model import CloudConfig, NodeType

MIXED_TYPE_WEIGHTS = {
    NodeType.DUMP_FILE: 40,
    NodeType.SPARQL: 30,
    NodeType.DEREFERENCING: 21,
    NodeType.CKAN: 5,
    NodeType.RDFA: 4,
}


def data_web(seed: int = 0, triples_per_graph: int = 1000, **kw) -> CloudConfig:
    """100 mixed-type nodes with 30% of the dump files compressed."""
    return CloudConfig(
        node_count=100,
        type_weights=dict(MIXED_TYPE_WEIGHTS),
        avg_node_degree=20,
        triples_per_graph=triples_per_graph,
        avg_resource_degree=9,
        dump_compression_ratio=0.3,
        seed=seed,
    ).with_(**kw)


def efficiency(seed: int = 0, triples_per_graph: int = 1000, **kw) -> CloudConfig:
    """200 dereferencing nodes for throughput measurements."""
    return CloudConfig(
        node_count=200,
        type_weights={NodeType.DEREFERENCING: 1},
        avg_node_degree=20,
        triples_per_graph=triples_per_graph,
        avg_resource_degree=9,
        seed=seed,
    ).with_(**kw)


def robots(seed: int = 0, crawl_delay: float = 10.0, **kw) -> CloudConfig:
    """25 sparse dereferencing nodes with 10% disallowed copies and a
    Crawl-delay, for politeness measurements."""
    return CloudConfig(
        node_count=25,
        type_weights={NodeType.DEREFERENCING: 1},
        avg_node_degree=5,
        triples_per_graph=1000,
        avg_resource_degree=6,
        disallowed_ratio=0.1,
        crawl_delay=crawl_delay,
        seed=seed,
    ).with_(**kw)


PRESETS = {"data-web": data_web, "efficiency": efficiency, "robots": robots}
