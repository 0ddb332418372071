import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crawlbench.cloudgen import generate_cloud
from crawlbench.manifest import decode, encode, read_manifest, write_manifest
from crawlbench.model import CloudConfig, NodeType
from crawlbench.presets import MIXED_TYPE_WEIGHTS
from crawlbench.rdfio import RdfFormat, parse


def _small(seed=0, **kw):
    base = dict(node_count=12, type_weights=MIXED_TYPE_WEIGHTS, avg_node_degree=4,
                triples_per_graph=40, dump_compression_ratio=0.5, seed=seed)
    base.update(kw)
    return CloudConfig(**base)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_encoding_idempotent(seed):
    m = generate_cloud(_small(seed))
    data = encode(m)
    assert encode(decode(data)) == data


def test_encoding_is_canonical_json():
    data = encode(generate_cloud(_small(3)))
    obj = json.loads(data)
    assert data == (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode()
    assert obj["generator"] == "numpy-PCG64/SeedSequence/v1"
    assert b"\r" not in data


def test_directory_layout(tmp_path):
    m = generate_cloud(_small(2, disallowed_ratio=0.2, type_weights={NodeType.DEREFERENCING: 1}))
    write_manifest(m, tmp_path)
    assert read_manifest(tmp_path).per_node.keys() == m.per_node.keys()
    for k, nd in m.per_node.items():
        text = (tmp_path / "expected" / f"node-{k}.nt").read_text()
        lines = text.splitlines()
        assert lines == sorted(set(lines))
        assert parse(text.encode(), RdfFormat.NTRIPLES) == set(nd.expected_triples())
        assert not any("/disallowed/" in line.split(" ")[0] for line in lines)


def test_foreign_generator_refused():
    obj = json.loads(encode(generate_cloud(_small())))
    obj["generator"] = "something-else"
    with pytest.raises(ValueError):
        decode(json.dumps(obj).encode())


def test_seed_uris_are_entrances():
    m = generate_cloud(_small(5))
    assert m.seed_uris() == [m.per_node[k].entrance for k in m.web_graph.seeds]
    assert m.expected_total() == sum(len(nd.expected_triples()) for nd in m.per_node.values())
