from fractions import Fraction

import pydot
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crawlbench.cloudgen import generate_cloud
from crawlbench.evaluator import (crawl_delay_fulfilment, evaluate, export_dot, recall,
                                  recall_from_sets, requested_disallowed_ratio,
                                  runtime_and_series)
from crawlbench.model import CloudConfig, NodeType
from crawlbench.nodes import RequestRecord
from crawlbench.presets import MIXED_TYPE_WEIGHTS

S = 10**9


def _lines(prefix, n):
    return {f"<http://{prefix}/{i}> <http://p> <http://o> ." for i in range(n)}


def _log(node, gaps_ns, start=0, path="/x"):
    t, out = start, [RequestRecord(node, path, start, False)]
    for g in gaps_ns:
        t += g
        out.append(RequestRecord(node, path, t, False))
    return out


def test_full_and_empty_recall():
    exp = {0: _lines("a", 5), 1: _lines("b", 3)}
    full = recall_from_sets(exp, exp[0] | exp[1] | {"<http://extra> <http://p> <http://o> ."})
    assert full.micro == full.macro == 1
    empty = recall_from_sets(exp, set())
    assert empty.micro == empty.macro == 0


def test_recall_equal_nodes_half_found():
    exp = {0: _lines("a", 100), 1: _lines("b", 100)}
    r = recall_from_sets(exp, exp[0])
    assert r.micro == Fraction(1, 2) and r.macro == Fraction(1, 2)


def test_recall_unequal_nodes():
    exp = {0: _lines("a", 100), 1: _lines("b", 50)}
    r = recall_from_sets(exp, exp[0])
    assert r.micro == Fraction(100, 150) and r.macro == Fraction(1, 2)
    assert (r.true_positives, r.expected_total) == (100, 150)


def test_empty_expected_set_counts_as_one():
    r = recall_from_sets({0: set(), 1: _lines("b", 2)}, set())
    assert r.per_node == {0: 1, 1: 0}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=6))
def test_recall_invariants(spec):
    exp = {k: _lines(f"n{k}", n) for k, (n, _) in enumerate(spec)}
    sink = set()
    for k, (n, found) in enumerate(spec):
        sink |= set(sorted(exp[k])[:found])
    r = recall_from_sets(exp, sink)
    assert r.micro == (Fraction(r.true_positives, r.expected_total) if r.expected_total else 1)
    assert min(r.per_node.values()) <= r.macro <= max(r.per_node.values())
    assert all(0 <= v <= 1 for v in r.per_node.values())


def test_recall_against_manifest_ignores_copies():
    m = generate_cloud(CloudConfig(node_count=3, avg_node_degree=2, triples_per_graph=30,
                                   disallowed_ratio=0.5, seed=2))
    served = [t for nd in m.per_node.values() for t in nd.served_triples()]
    expected = [t for nd in m.per_node.values() for t in nd.expected_triples()]
    assert recall(m, served).micro == 1
    assert recall(m, expected).micro == 1
    assert recall(m, served).expected_total == m.expected_total()


def test_cdf_exact_gaps():
    r = crawl_delay_fulfilment({0: _log(0, [10 * S] * 4)}, 10)
    assert r.avg == r.min == r.max == 1


def test_cdf_table_anchor():
    r = crawl_delay_fulfilment({0: _log(0, [6_990_000_000] * 9)}, 10)
    assert r.avg == Fraction(699, 1000)


def test_cdf_single_request_skipped():
    logs = {0: _log(0, [5 * S, 5 * S]), 1: _log(1, [])}
    r = crawl_delay_fulfilment(logs, 10)
    assert list(r.per_node) == [0] and r.min == r.max == r.avg == Fraction(1, 2)


def test_cdf_undefined_without_contributors():
    r = crawl_delay_fulfilment({0: _log(0, [])}, 10)
    assert r.avg is None and r.min is None and r.max is None


def test_cdf_needs_positive_delay():
    with pytest.raises(ValueError):
        crawl_delay_fulfilment({}, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.integers(1, 10**10), min_size=1, max_size=6), min_size=1, max_size=4))
def test_cdf_scale_covariant(gap_lists):
    logs = {k: _log(k, g) for k, g in enumerate(gap_lists)}
    doubled = {k: _log(k, [2 * x for x in g]) for k, g in enumerate(gap_lists)}
    a, b = crawl_delay_fulfilment(logs, 3), crawl_delay_fulfilment(doubled, 3)
    assert {k: 2 * v for k, v in a.per_node.items()} == b.per_node


def _robots_manifest():
    m = generate_cloud(CloudConfig(node_count=3, avg_node_degree=2, triples_per_graph=200,
                                   disallowed_ratio=0.1, seed=4))
    return m


def _hits(node, iris):
    return [RequestRecord(node, "/" + iri.split("/", 3)[3], i, True) for i, iri in enumerate(iris)]


def test_rdr_polite_and_impolite():
    m = _robots_manifest()
    assert requested_disallowed_ratio({}, m).rdr == 0
    logs = {k: _hits(k, nd.disallowed) for k, nd in m.per_node.items()}
    assert requested_disallowed_ratio(logs, m).rdr == 1


def test_rdr_hand_example():
    m = _robots_manifest()
    for k in m.per_node:
        rdf = m.per_node[k].rdf
        rdf.disallowed = [f"http://{m.nodes[k].host}/disallowed/x{i}" for i in range(8)]
    logs = {0: _hits(0, m.per_node[0].disallowed[:4] * 2)}
    r = requested_disallowed_ratio(logs, m)
    assert r.rdr == Fraction(1, 6)
    assert (r.requested, r.total) == (4, 24)


def test_rdr_undefined_without_copies():
    m = generate_cloud(CloudConfig(node_count=2, avg_node_degree=2, triples_per_graph=10))
    assert requested_disallowed_ratio({}, m).rdr is None


def test_runtime_and_series():
    runtime, series = runtime_and_series(0, 0, [])
    assert runtime == 0 and series == []
    arrivals = [i * S for i in range(1, 11)]
    runtime, series = runtime_and_series(0, 11 * S, arrivals)
    assert runtime == 11
    assert series == [(float(i), i) for i in range(1, 11)]
    # arrivals after the end are clipped, arrivals sharing an instant merge
    _, series = runtime_and_series(0, 5 * S, [S, S, 2 * S, 9 * S])
    assert series == [(1.0, 2), (2.0, 3)]


def test_report_is_pure_and_embeds_config():
    m = _robots_manifest()
    sink = [t for nd in m.per_node.values() for t in nd.expected_triples()]
    logs = {0: _log(0, [S, S])}
    a = evaluate(m, sink, logs, 0, 3 * S, [S, 2 * S])
    b = evaluate(m, sink, logs, 0, 3 * S, [S, 2 * S])
    assert a == b
    assert a.config == m.config.to_dict() and a.seed == m.config.seed
    assert a.micro_recall == 1 and a.rdr == 0


def test_dot_export_parses():
    m = generate_cloud(CloudConfig(node_count=12, type_weights=MIXED_TYPE_WEIGHTS,
                                   avg_node_degree=4, triples_per_graph=10, seed=3))
    report = evaluate(m, [], {}, 0, 1)
    (g,) = pydot.graph_from_dot_data(export_dot(m, report))
    names = {n.get_name() for n in g.get_nodes()} - {"node"}
    assert len(names) == 12
    assert len(g.get_edges()) == len(m.web_graph.edges)


def test_dot_two_nodes_one_arc():
    m = generate_cloud(CloudConfig(node_count=2, type_weights={NodeType.CKAN: 1, NodeType.DEREFERENCING: 1},
                                   avg_node_degree=1, triples_per_graph=3))
    dot = export_dot(m)
    assert dot.count("->") == len(m.web_graph.edges) == 1
    assert dot.count("label=") == 2
