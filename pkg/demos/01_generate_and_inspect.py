"""
Generating a synthetic Data Web
===============================

Build the mixed-type cloud, look at how node types and degrees are
distributed, and check that everything is reachable from the seeds.
Nothing is served here.
"""

from collections import Counter

import numpy as np

from crawlbench import generate_cloud
from crawlbench.model import check_crawlable
from crawlbench.presets import data_web

# smaller graphs keep the demo quick; the node graph is unaffected
manifest = generate_cloud(data_web(seed=1, triples_per_graph=200))
graph = manifest.web_graph

print("node types:", dict(Counter(n.type.value for n in manifest.nodes)))
print("edges:", len(graph.edges), " average degree:", round(graph.average_degree(), 2))

# preferential attachment gives a few heavily linked hubs
in_deg = np.array(graph.in_degrees())
print("in-degree median / max:", int(np.median(in_deg)), "/", int(in_deg.max()))

print("seeds:", graph.seeds)
print("crawlable from seeds:", check_crawlable(graph, graph.seeds))

# every node's dataset grows from a single entrance resource
sizes = [nd.rdf.size for nd in manifest.per_node.values() if nd.rdf]
print("triples per dataset:", min(sizes), "to", max(sizes))
print("expected triples in total:", manifest.expected_total())
print("seed URIs handed to a crawler:", manifest.seed_uris())
