"""Typed nodes, the node graph, the seed set, and the whole cloud."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .manifest import CloudManifest, NodeData
from .model import (
    CloudConfig,
    ConnectivityMatrix,
    NodeSpec,
    NodeType,
    WebGraph,
    check_crawlable,
    exact,
)
from .rdfgen import ExternalRef, dump_path, entrance_reference, generate_node_rdf
from .rdfio import Compression
from .streams import GRAPH_STREAM, RDF_STREAM, TYPES_STREAM, Draws

COMPRESSIONS = (Compression.ZIP, Compression.GZIP, Compression.BZIP2)


class GenerationError(ValueError):
    pass


@dataclass
class TraceStep:
    node: int
    out_targets: list[int]
    in_sources: list[int]
    draws: int


@dataclass
class GenerationTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def replay(self, nodes) -> WebGraph:
        """Rebuild the node graph from the recorded steps."""
        graph = WebGraph(nodes=list(nodes))
        for step in self.steps:
            graph.edges.update((step.node, t) for t in step.out_targets)
            graph.edges.update((s, step.node) for s in step.in_sources)
        return graph

    def to_text(self) -> str:
        lines = ["# node\tout_targets\tin_sources\tprng_draws"]
        for s in self.steps:
            lines.append(
                f"{s.node}\t{','.join(map(str, s.out_targets)) or '-'}\t"
                f"{','.join(map(str, s.in_sources)) or '-'}\t{s.draws}"
            )
        return "\n".join(lines) + "\n"


def assign_node_types(config: CloudConfig, draws: Draws | None = None) -> list[NodeType]:
    """One node of each used type (canonical order) followed by weighted
    random draws until ``node_count`` nodes exist."""
    used = config.used_types
    if config.node_count < len(used):
        raise GenerationError("node count below type count")
    draws = draws or Draws(config.seed, TYPES_STREAM)
    weights = [config.type_weights[t] for t in used]
    types = list(used)
    while len(types) < config.node_count:
        types.append(used[draws.categorical(weights)])
    return types


def assign_dump_settings(
    types: list[NodeType], config: CloudConfig, draws: Draws
) -> dict[int, tuple[str, str | None]]:
    """Serialization and compression for every dump-file node.

    ``round(ratio * #dump nodes)`` of them, chosen uniformly, get a codec
    drawn uniformly from ZIP, Gzip and bzip2.
    """
    dump_ids = [i for i, t in enumerate(types) if t is NodeType.DUMP_FILE]
    formats = sorted(config.dump_formats_enabled)
    settings = {i: (formats[draws.index(len(formats))], None) for i in dump_ids}
    n_compressed = math.floor(exact(config.dump_compression_ratio) * len(dump_ids) + exact("1/2"))
    for j in sorted(draws.sample(len(dump_ids), n_compressed)):
        i = dump_ids[j]
        codec = COMPRESSIONS[draws.index(len(COMPRESSIONS))]
        settings[i] = (settings[i][0], codec.label)
    return settings


def edges_per_side(avg_node_degree) -> int:
    """Out-edges (and, separately, in-edges) added with each new node."""
    return max(1, math.floor(exact(avg_node_degree) / 4 + exact("1/2")))


def build_node_graph(
    nodes,
    matrix: ConnectivityMatrix,
    avg_node_degree,
    draws: Draws | None = None,
    trace: GenerationTrace | None = None,
) -> WebGraph:
    """Preferential-attachment node graph respecting ``matrix``.

    ``nodes`` is a list of :class:`NodeSpec` or bare :class:`NodeType`
    values. The leading block of distinct types is fully connected (where
    permitted); every later node gets up to ``m`` out-edges to earlier
    nodes weighted by ``in-degree + 1`` and up to ``m`` in-edges from
    earlier nodes weighted by ``out-degree + 1``.
    """
    nodes = [
        n if isinstance(n, NodeSpec) else NodeSpec(i, n, f"node-{i}", 0)
        for i, n in enumerate(nodes)
    ]
    if not nodes:
        raise GenerationError("cannot build a graph without nodes")
    if draws is None:
        draws = Draws(0, GRAPH_STREAM)
    trace = trace if trace is not None else GenerationTrace()
    types = [n.type for n in nodes]
    n_initial = len(set(types))
    if len(set(types[:n_initial])) != n_initial:
        raise GenerationError("the first nodes must cover every used type exactly once")
    m = edges_per_side(avg_node_degree)

    graph = WebGraph(nodes=nodes)
    in_deg = [0] * len(nodes)
    out_deg = [0] * len(nodes)

    def add(u, v):
        graph.edges.add((u, v))
        out_deg[u] += 1
        in_deg[v] += 1

    for i in range(n_initial):
        before = draws.count
        outs = [j for j in range(n_initial) if j != i and matrix.permits(types[i], types[j])]
        if n_initial > 1 and not outs and not any(
                matrix.permits(types[j], types[i]) for j in range(n_initial) if j != i):
            raise GenerationError("isolated type under connectivity matrix")
        for j in outs:
            add(i, j)
        trace.steps.append(TraceStep(i, outs, [], draws.count - before))

    for k in range(n_initial, len(nodes)):
        before = draws.count
        out_cands = [j for j in range(k) if matrix.permits(types[k], types[j])]
        in_cands = [j for j in range(k) if matrix.permits(types[j], types[k])]
        if not out_cands and not in_cands:
            raise GenerationError("isolated type under connectivity matrix")
        outs = [out_cands[i] for i in draws.weighted_sample([in_deg[j] + 1 for j in out_cands], m)]
        ins = [in_cands[i] for i in draws.weighted_sample([out_deg[j] + 1 for j in in_cands], m)]
        for j in outs:
            add(k, j)
        for j in ins:
            add(j, k)
        trace.steps.append(TraceStep(k, outs, ins, draws.count - before))
    return graph


def compute_seed_set(graph: WebGraph) -> list[int]:
    """Greedy cover: take the lowest unmarked node, mark everything it
    reaches, repeat."""
    adj = graph.adjacency()
    marked = set()
    seeds = []
    for start in sorted(adj):
        if start in marked:
            continue
        seeds.append(start)
        marked.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in marked:
                    marked.add(v)
                    queue.append(v)
    return seeds


def _served_urls(node: NodeSpec, nd: NodeData) -> list[str]:
    base = f"http://{node.host}"
    if node.type is NodeType.DEREFERENCING:
        return nd.rdf.resources + nd.rdf.disallowed
    if node.type is NodeType.DUMP_FILE:
        return [base + dump_path(node)]
    if node.type is NodeType.SPARQL:
        return [base + "/sparql"]
    if node.type is NodeType.RDFA:
        return [base + "/index.html"]
    return [base + "/", base + "/api/3/action/package_list"] + [
        f"{base}/api/3/action/package_show?id={d['id']}" for d in nd.datasets
    ]


def generate_cloud(
    config: CloudConfig,
    matrix: ConnectivityMatrix | None = None,
    trace: GenerationTrace | None = None,
) -> CloudManifest:
    """Generate nodes, node graph, seeds and every node's dataset."""
    matrix = matrix or ConnectivityMatrix.default()
    type_draws = Draws(config.seed, TYPES_STREAM)
    types = assign_node_types(config, type_draws)
    dump = assign_dump_settings(types, config, type_draws)
    nodes = [
        NodeSpec(k, t, config.host(k), config.base_port + k, *dump.get(k, (None, None)))
        for k, t in enumerate(types)
    ]
    graph = build_node_graph(nodes, matrix, config.avg_node_degree,
                             Draws(config.seed, GRAPH_STREAM), trace)
    graph.seeds = compute_seed_set(graph)
    if not check_crawlable(graph, graph.seeds):
        raise GenerationError("seed set does not cover the node graph")

    per_node = {}
    for node in nodes:
        refs = [ExternalRef(t, entrance_reference(nodes[t])) for t in graph.out_targets(node.id)]
        if node.type is NodeType.CKAN:
            datasets = [{"id": f"dataset-{i}", "node": r.target, "url": r.iri}
                        for i, r in enumerate(refs)]
            nd = NodeData(rdf=None, urls=[], entrance=entrance_reference(node), datasets=datasets)
        else:
            rdf = generate_node_rdf(
                node, refs, config.triples_per_graph, config.avg_resource_degree,
                config.disallowed_ratio, Draws(config.seed, RDF_STREAM, node.id),
            )
            nd = NodeData(rdf=rdf, urls=[], entrance=entrance_reference(node))
        nd.urls = _served_urls(node, nd)
        per_node[node.id] = nd
    return CloudManifest(config=config, matrix=matrix, web_graph=graph, per_node=per_node)

