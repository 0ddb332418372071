"""Command-line entry point: ``crawlbench generate|serve|run|evaluate|crawl``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .crawler import CrawlOptions, Crawler, read_hosts, read_seeds
from .harness import (DEFAULT_TIMEOUT, CrawlerLaunch, evaluate_run, generate_only,
                      load_config, run_benchmark, serve_only, write_report)
from .manifest import read_manifest
from .presets import PRESETS


def _config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML file with CloudConfig keys")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a built-in configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--base-port", type=int)
    p.add_argument("--node-count", type=int)
    p.add_argument("--triples-per-graph", type=int)
    p.add_argument("--crawl-delay", type=float)
    p.add_argument("--emit-trace", action="store_true",
                   help="write the node-graph construction trace")


def _crawl_opts(p: argparse.ArgumentParser):
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--strategy", choices=("lbs", "bfs"), default="lbs")
    p.add_argument("--impolite", action="store_true",
                   help="ignore robots.txt Disallow and Crawl-delay")


def _options(args) -> CrawlOptions:
    polite = not args.impolite
    return CrawlOptions(obey_disallow=polite, obey_delay=polite,
                        workers=args.workers, strategy=args.strategy)


def _resolve_config(args):
    overrides = {
        "seed": args.seed,
        "base_port": args.base_port,
        "node_count": args.node_count,
        "triples_per_graph": args.triples_per_graph,
        "crawl_delay": args.crawl_delay,
    }
    base = PRESETS[args.preset]() if args.preset else None
    return load_config(args.config, base, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crawlbench",
                                     description="Synthetic Linked Data cloud for benchmarking crawlers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a cloud manifest without serving it")
    _config_args(g)
    g.add_argument("--out-dir", required=True)

    s = sub.add_parser("serve", help="serve a saved manifest until interrupted")
    s.add_argument("manifest_dir")
    s.add_argument("--sink-port", type=int, default=0)
    s.add_argument("--out-dir", help="where to flush request logs and the sink dump on exit")

    r = sub.add_parser("run", help="generate, serve, crawl and evaluate")
    _config_args(r)
    launch = r.add_mutually_exclusive_group()
    launch.add_argument("--crawler-cmd",
                        help="command template; {seeds-file}, {sink-url} and {hosts-file} are substituted")
    launch.add_argument("--reference-crawler", action="store_true",
                        help="use the built-in crawler (default when no command is given)")
    r.add_argument("--out-dir", required=True)
    r.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds")
    r.add_argument("--sink-port", type=int, default=0)
    _crawl_opts(r)

    e = sub.add_parser("evaluate", help="recompute the report of a finished run directory")
    e.add_argument("run_dir")

    c = sub.add_parser("crawl", help="run the reference crawler against a served cloud")
    c.add_argument("--seeds-file", required=True)
    c.add_argument("--sink-url", required=True)
    c.add_argument("--hosts-file", help="lines of '<virtual host> <host:port>'")
    _crawl_opts(c)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "generate":
        cfg, matrix = _resolve_config(args)
        manifest = generate_only(cfg, matrix, args.out_dir, args.emit_trace)
        print(f"{len(manifest.nodes)} nodes, {len(manifest.web_graph.edges)} edges, "
              f"{manifest.expected_total()} expected triples -> {args.out_dir}")
        return 0

    if args.command == "serve":
        serve_only(args.manifest_dir, args.sink_port, args.out_dir)
        return 0

    if args.command == "run":
        cfg, matrix = _resolve_config(args)
        launch = CrawlerLaunch(command=args.crawler_cmd, options=_options(args))
        report = run_benchmark(cfg, matrix, launch, args.out_dir, args.timeout,
                               args.emit_trace, args.sink_port)
        print(report.summary(), end="")
        return 0

    if args.command == "evaluate":
        report = evaluate_run(args.run_dir)
        write_report(report, read_manifest(Path(args.run_dir) / "manifest"), Path(args.run_dir))
        print(report.summary(), end="")
        return 0

    if args.command == "crawl":
        opts = _options(args)
        if args.hosts_file:
            opts.hosts = read_hosts(args.hosts_file)
        return Crawler(args.sink_url, opts).crawl(read_seeds(args.seeds_file))
    return 2


if __name__ == "__main__":
    sys.exit(main())
