"""
Crawling a small cloud end to end
=================================

Serve a cloud on localhost, let the built-in crawler loose on it and read
the report. Swap in your own crawler with ``CrawlerLaunch("cmd ...")``.
"""

import tempfile

from crawlbench import CloudConfig, run_benchmark
from crawlbench.harness import CrawlerLaunch, find_free_base_port
from crawlbench.presets import MIXED_TYPE_WEIGHTS

cfg = CloudConfig(node_count=20, type_weights=MIXED_TYPE_WEIGHTS, avg_node_degree=6,
                  triples_per_graph=100, dump_compression_ratio=0.3, seed=3)
cfg = cfg.with_(base_port=find_free_base_port(cfg.node_count))

out = tempfile.mkdtemp(prefix="crawlbench-demo-")
report = run_benchmark(cfg, crawler=CrawlerLaunch(), out_dir=out, timeout=300)
print(report.summary())

# the sink fills up over time; the last point is what the crawler found
for t, count in report.triples_over_time[:: max(1, len(report.triples_over_time) // 8)]:
    print(f"{t:7.3f} s  {count:6d} triples")

print("artifacts in", out, "(report.json, cloud.dot, requests.jsonl, ...)")
