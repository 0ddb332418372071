"""Per-node RDF dataset generation.

The internal graph grows one resource at a time. Each new resource draws a
target degree uniformly from ``[1, 2d]`` and keeps linking to existing
resources, picked with probability proportional to ``degree + 1``, until it
reaches that degree (the same pair may be linked again through another
property). Its first triple always points *to* it, which keeps every
resource reachable from the first one; later triples point to it with
probability :func:`direction_probability`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import NodeSpec, NodeType, RdfGraph, exact
from .rdfio import Compression, RdfFormat
from .streams import Draws

PROPERTY_COUNT = 8


@dataclass(frozen=True)
class ExternalRef:
    target: int
    iri: str


def direction_probability(d_r: int) -> Fraction:
    """Probability that a non-first triple of a resource with target degree
    ``d_r`` has the new resource as object.

    Together with the forced first incoming triple this makes half of a
    resource's triples incoming on average.
    """
    if d_r < 2:
        raise ValueError("undefined probability for degree < 2")
    return (Fraction(d_r, 2) - 1) / (d_r - 1)


def dump_extension(node: NodeSpec) -> str:
    fmt = RdfFormat.parse(node.dump_format)
    return fmt.extension + Compression.parse(node.compression).extension


def dump_path(node: NodeSpec) -> str:
    return "/dumpFile" + dump_extension(node)


def uri_for(node: NodeSpec, resource_index: int) -> str:
    h = node.host
    if node.type in (NodeType.DEREFERENCING, NodeType.SPARQL):
        return f"http://{h}/dataset-0/resource-{resource_index}"
    if node.type is NodeType.DUMP_FILE:
        return f"http://{h}{dump_path(node)}#dataset-0-resource-{resource_index}"
    if node.type is NodeType.RDFA:
        return f"http://{h}/index.html#dataset-0-resource-{resource_index}"
    raise ValueError("catalogue nodes have no generated resources")


def property_iris(node: NodeSpec, count: int = PROPERTY_COUNT) -> list[str]:
    return [f"http://{node.host}/ontology/property-{i}" for i in range(count)]


def entrance_reference(node: NodeSpec) -> str:
    """The IRI other datasets use to link to ``node``."""
    if node.type is NodeType.SPARQL:
        return f"http://{node.host}/sparql"
    if node.type is NodeType.CKAN:
        return f"http://{node.host}/"
    if node.type is NodeType.RDFA:
        return f"http://{node.host}/index.html"
    return uri_for(node, 0)


def disallowed_copy(iri: str) -> str:
    scheme, rest = iri.split("://", 1)
    host, _, path = rest.partition("/")
    return f"{scheme}://{host}/disallowed/{path}"


def generate_internal_graph(
    internal_size: int,
    properties: list[str],
    avg_degree: int,
    draws: Draws,
    mint=lambda i: f"r{i}",
) -> RdfGraph:
    """Grow a graph with exactly ``internal_size`` triples that is crawlable
    from its first resource.

    Parameters
    ----------
    internal_size : int
        Number of graph-internal triples to create.
    properties : list of str
        Predicates, drawn uniformly per triple.
    avg_degree : int
        Target degrees are uniform integers in ``[1, 2 * avg_degree]``.
    draws : Draws
        Random stream owned by this graph.
    mint : callable
        Maps a resource index to its IRI.
    """
    if internal_size < 0:
        raise ValueError("internal_size must be non-negative")
    if internal_size > 0 and not properties:
        raise ValueError("cannot create triples without properties")
    if avg_degree < 1:
        raise ValueError("avg_degree must be >= 1")

    resources = [mint(0)]
    degree = np.zeros(internal_size + 1)
    triples: list = []
    seen: set = set()
    n_props = len(properties)
    while len(triples) < internal_size:
        n = len(resources)
        new = mint(n)
        d_r = draws.integer(1, 2 * avg_degree)
        p_in = float(direction_probability(d_r)) if d_r >= 2 else 0.0
        # Only 2 * |P| * n distinct triples can join the new resource to the
        # existing ones; in tiny graphs the drawn degree may exceed that.
        target = min(d_r, 2 * n_props * n)
        deg_new = 0
        while len(triples) < internal_size and deg_new < target:
            chosen = draws.weighted_sample(degree[:n] + 1.0, min(target - deg_new, n))
            for c in chosen:
                if len(triples) == internal_size:
                    break
                prop = properties[draws.index(n_props)]
                if deg_new == 0 or draws.bernoulli(p_in):
                    t = (resources[c], prop, new)
                else:
                    t = (new, prop, resources[c])
                if t in seen:
                    continue
                seen.add(t)
                triples.append(t)
                degree[c] += 1
                degree[n] += 1
                deg_new += 1
        resources.append(new)
    return RdfGraph(resources=resources, properties=list(properties), internal_triples=triples)


def add_outgoing_links(graph: RdfGraph, targets: list[ExternalRef], draws: Draws) -> RdfGraph:
    """One triple per target, from a uniformly drawn resource of ``graph``."""
    P = graph.properties
    for ref in targets:
        s = graph.resources[draws.index(len(graph.resources))]
        p = P[draws.index(len(P))]
        graph.outgoing_triples.append((s, p, ref.iri))
    graph.externals = sorted({ref.iri for ref in targets} | set(graph.externals))
    return graph


def inject_disallowed(
    graph: RdfGraph, ratio, node: NodeSpec, draws: Draws
) -> tuple[RdfGraph, list[str]]:
    """Copy ``ceil(ratio * |R|)`` resources under ``/disallowed/``.

    Each copy carries the subject triples of its original (with the copy as
    subject) and is announced by one allowed triple ``(original, p, copy)``.
    """
    ratio = exact(ratio)
    if not 0 <= ratio <= 1:
        raise ValueError("ratio must lie in [0, 1]")
    if ratio == 0:
        return graph, []
    if node.type is not NodeType.DEREFERENCING:
        raise ValueError(f"disallowed copies are not supported on {node.type.value} nodes")
    count = math.ceil(ratio * len(graph.resources))
    picked = sorted(draws.sample(len(graph.resources), count))
    by_subject: dict[str, list] = {}
    for t in graph.internal_triples + graph.outgoing_triples:
        by_subject.setdefault(t[0], []).append(t)
    P = graph.properties
    copies = []
    for i in picked:
        original = graph.resources[i]
        copy = disallowed_copy(original)
        copies.append(copy)
        graph.pointer_triples.append((original, P[draws.index(len(P))], copy))
        for _, p, o in by_subject.get(original, []):
            graph.disallowed_triples.append((copy, p, o))
    graph.disallowed = copies
    return graph, copies


def generate_node_rdf(
    node: NodeSpec,
    targets: list[ExternalRef],
    triples_per_graph: int,
    avg_degree: int,
    disallowed_ratio,
    draws: Draws,
) -> RdfGraph:
    """Full dataset of one resource-bearing node: internal graph, one
    outgoing triple per node-graph edge, optional disallowed copies."""
    internal = max(triples_per_graph - len(targets), 0)
    graph = generate_internal_graph(
        internal, property_iris(node), avg_degree, draws, mint=lambda i: uri_for(node, i)
    )
    add_outgoing_links(graph, targets, draws)
    if node.type is NodeType.DEREFERENCING:
        inject_disallowed(graph, disallowed_ratio, node, draws)
    return graph
