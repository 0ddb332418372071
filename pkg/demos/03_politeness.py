"""
Does the crawler respect robots.txt?
====================================

Each node hides copies of some resources under a disallowed path and asks
for a delay between requests. A polite crawl should request none of the
copies and keep the delay; an impolite one takes everything at full speed.
"""

from crawlbench import run_benchmark
from crawlbench.crawler import CrawlOptions
from crawlbench.harness import CrawlerLaunch, find_free_base_port
from crawlbench.presets import robots

# a short delay and small datasets so this finishes in well under a minute
cfg = robots(seed=0, crawl_delay=0.2, node_count=8, triples_per_graph=100)

for polite in (True, False):
    cfg = cfg.with_(base_port=find_free_base_port(cfg.node_count))
    opts = CrawlOptions(obey_disallow=polite, obey_delay=polite)
    report = run_benchmark(cfg, crawler=CrawlerLaunch(options=opts), timeout=300)
    label = "polite  " if polite else "impolite"
    print(f"{label} RDR {float(report.rdr):.2f}  CDF avg {float(report.cdf_avg):.2f}  "
          f"recall {float(report.micro_recall):.3f}  {report.runtime_seconds:.1f} s")
