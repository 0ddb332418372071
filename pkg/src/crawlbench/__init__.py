"""Synthetic Linked Data cloud generator, servers, reference crawler and
evaluator for benchmarking Data Web crawlers."""

from .cloudgen import GenerationError, GenerationTrace, compute_seed_set, generate_cloud
from .crawler import CrawlOptions, Crawler, crawl
from .evaluator import (crawl_delay_fulfilment, evaluate, export_dot, recall,
                        requested_disallowed_ratio, runtime_and_series)
from .harness import CrawlerLaunch, generate_only, load_config, run_benchmark, serve_only
from .manifest import CloudManifest, read_manifest, write_manifest
from .model import (CloudConfig, ConnectivityMatrix, NodeSpec, NodeType, RdfGraph, RunReport,
                    WebGraph, check_crawlable)
from .nodes import Cloud, NodeApp
from .rdfio import Compression, RdfFormat, negotiate, parse, serialize
from .sink import SinkServer, SinkStore

__version__ = "0.1.0"
