"""KPIs computed after a crawl from the manifest, the sink snapshot and the
node request logs. All ratios are exact fractions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping
from urllib.parse import urlsplit

from .manifest import CloudManifest
from .model import RunReport, exact
from .nodes import RequestRecord
from .rdfio import canonical_line


@dataclass
class RecallResult:
    per_node: dict[int, Fraction]
    micro: Fraction
    macro: Fraction
    true_positives: int
    expected_total: int


@dataclass
class DelayResult:
    per_node: dict[int, Fraction]
    min: Fraction | None
    max: Fraction | None
    avg: Fraction | None


@dataclass
class DisallowedResult:
    per_node: dict[int, Fraction]
    rdr: Fraction | None
    requested: int
    total: int


def _as_lines(sink_triples: Iterable) -> set[str]:
    out = set()
    for t in sink_triples:
        out.add(t if isinstance(t, str) else canonical_line(t))
    return out


def recall_from_sets(expected: Mapping[int, set[str]], sink: set[str]) -> RecallResult:
    """Per-node, micro and macro recall. A node without expected triples
    has recall 1."""
    per_node = {}
    tp = total = 0
    for k in sorted(expected):
        exp = expected[k]
        hit = len(exp & sink)
        per_node[k] = Fraction(hit, len(exp)) if exp else Fraction(1)
        tp += hit
        total += len(exp)
    micro = Fraction(tp, total) if total else Fraction(1)
    macro = sum(per_node.values(), Fraction(0)) / len(per_node) if per_node else Fraction(1)
    return RecallResult(per_node, micro, macro, tp, total)


def recall(manifest: CloudManifest, sink_triples: Iterable) -> RecallResult:
    """Compare the sink against every node's expected triples.

    ``sink_triples`` holds canonical N-Triples lines or ``(s, p, o)``
    tuples; extra triples in the sink are ignored.
    """
    expected = {
        k: {canonical_line(t) for t in nd.expected_triples()}
        for k, nd in manifest.per_node.items()
    }
    return recall_from_sets(expected, _as_lines(sink_triples))


def crawl_delay_fulfilment(
    logs: Mapping[int, list[RequestRecord]], configured_delay
) -> DelayResult:
    """Mean inter-arrival gap per node divided by the configured delay.

    Nodes with fewer than two requests do not contribute. Values below 1
    mean the crawler was faster than the server asked.
    """
    delay_ns = exact(configured_delay) * 10**9
    if delay_ns <= 0:
        raise ValueError("configured delay must be positive")
    per_node = {}
    for k in sorted(logs):
        times = sorted(r.arrival_ns for r in logs[k])
        if len(times) < 2:
            continue
        mean_gap = Fraction(times[-1] - times[0], len(times) - 1)
        per_node[k] = mean_gap / delay_ns
    if not per_node:
        return DelayResult(per_node, None, None, None)
    values = list(per_node.values())
    return DelayResult(per_node, min(values), max(values),
                       sum(values, Fraction(0)) / len(values))


def requested_disallowed_ratio(
    logs: Mapping[int, list[RequestRecord]], manifest: CloudManifest
) -> DisallowedResult:
    """Mean, over nodes that have disallowed copies, of the fraction of
    those copies requested at least once."""
    per_node = {}
    requested = total = 0
    for k, nd in sorted(manifest.per_node.items()):
        paths = {urlsplit(iri).path for iri in nd.disallowed}
        if not paths:
            continue
        seen = {r.path for r in logs.get(k, [])} & paths
        per_node[k] = Fraction(len(seen), len(paths))
        requested += len(seen)
        total += len(paths)
    rdr = sum(per_node.values(), Fraction(0)) / len(per_node) if per_node else None
    return DisallowedResult(per_node, rdr, requested, total)


def runtime_and_series(
    start_ns: int, end_ns: int, arrivals_ns: Iterable[int]
) -> tuple[float, list[tuple[float, int]]]:
    """Runtime in seconds and the cumulative sink size over time.

    The series has one point per distinct arrival instant inside
    ``[start, end]``, with time in seconds since ``start``. Arrivals
    before ``start`` count toward the cumulative total.
    """
    runtime = (end_ns - start_ns) / 1e9
    series: list[tuple[float, int]] = []
    count = 0
    for t in sorted(arrivals_ns):
        if t > end_ns:
            break
        count += 1
        if t < start_ns:
            continue
        stamp = (t - start_ns) / 1e9
        if series and series[-1][0] == stamp:
            series[-1] = (stamp, count)
        else:
            series.append((stamp, count))
    return runtime, series


def evaluate(
    manifest: CloudManifest,
    sink_lines: Iterable,
    logs: Mapping[int, list[RequestRecord]],
    start_ns: int,
    end_ns: int,
    arrivals_ns: Iterable[int] = (),
    **extra,
) -> RunReport:
    """Assemble a :class:`RunReport`; ``extra`` fills provenance fields."""
    rec = recall(manifest, sink_lines)
    runtime, series = runtime_and_series(start_ns, end_ns, arrivals_ns)
    cfg = manifest.config
    cdf = (crawl_delay_fulfilment(logs, cfg.crawl_delay) if cfg.crawl_delay > 0
           else DelayResult({}, None, None, None))
    dis = requested_disallowed_ratio(logs, manifest)
    return RunReport(
        recall_per_node=rec.per_node,
        micro_recall=rec.micro,
        macro_recall=rec.macro,
        true_positives=rec.true_positives,
        expected_total=rec.expected_total,
        runtime_seconds=runtime,
        triples_over_time=series,
        rdr=dis.rdr,
        cdf_min=cdf.min,
        cdf_max=cdf.max,
        cdf_avg=cdf.avg,
        config=cfg.to_dict(),
        seed=cfg.seed,
        disallowed_total=dis.total,
        disallowed_requested=dis.requested,
        **extra,
    )


def export_dot(manifest: CloudManifest, report: RunReport | None = None) -> str:
    """Graphviz digraph of the node graph, vertices labelled with type and
    per-node recall."""
    per_node = report.recall_per_node if report else {}
    lines = ["digraph cloud {", "  node [shape=box];"]
    for n in manifest.nodes:
        r = per_node.get(n.id)
        recall_txt = "n/a" if r is None else f"{float(r):.3f}"
        seed = ", peripheries=2" if n.id in manifest.web_graph.seeds else ""
        lines.append(f'  n{n.id} [label="{n.id}: {n.type.value}\\nrecall {recall_txt}"{seed}];')
    for u, v in sorted(manifest.web_graph.edges):
        lines.append(f"  n{u} -> n{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
