"""Benchmark orchestration: generate, serve, crawl, evaluate."""

from __future__ import annotations

import json
import logging
import os
import random
import shlex
import socket
import subprocess
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .cloudgen import GenerationTrace, generate_cloud
from .crawler import CrawlOptions, Crawler
from .evaluator import evaluate, export_dot
from .manifest import CloudManifest, read_manifest, write_manifest
from .model import CloudConfig, ConnectivityMatrix, RunReport
from .nodes import Cloud, RequestRecord
from .sink import SinkServer, SinkStore

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30 * 60


@dataclass
class CrawlerLaunch:
    """How to start the crawler under test.

    ``command`` is a shell-style template; ``{seeds-file}``, ``{sink-url}``
    and ``{hosts-file}`` are substituted, and the same values are exported
    as ``CRAWLBENCH_SEEDS_FILE``, ``CRAWLBENCH_SINK_URL`` and
    ``CRAWLBENCH_HOSTS_FILE``. Without a command the built-in reference
    crawler runs in-process.
    """

    command: str | None = None
    options: CrawlOptions = field(default_factory=CrawlOptions)

    @property
    def reference(self) -> bool:
        return self.command is None


def load_config(path=None, base: CloudConfig | None = None,
                **overrides) -> tuple[CloudConfig, ConnectivityMatrix]:
    """Read a flat TOML config (keys named like :class:`CloudConfig`
    fields, plus an optional 5x5 ``connectivity`` array) on top of
    ``base`` and apply ``overrides`` (``None`` values are ignored)."""
    data = base.to_dict() if base is not None else {}
    if path is not None:
        with open(path, "rb") as fh:
            data.update(tomllib.load(fh))
    matrix_rows = data.pop("connectivity", None)
    data.update({k: v for k, v in overrides.items() if v is not None})
    matrix = ConnectivityMatrix(matrix_rows) if matrix_rows else ConnectivityMatrix.default()
    return CloudConfig.from_dict(data), matrix


def ports_free(base: int, count: int, host: str = "127.0.0.1") -> bool:
    socks = []
    try:
        for port in range(base, base + count):
            s = socket.socket()
            socks.append(s)
            s.bind((host, port))
        return True
    except OSError:
        return False
    finally:
        for s in socks:
            s.close()


def find_free_base_port(count: int, low: int = 20000, high: int = 30000) -> int:
    """A base port such that ``count`` consecutive ports are currently free."""
    rnd = random.Random()
    for _ in range(50):
        base = rnd.randrange(low, high - count)
        if ports_free(base, count):
            return base
    raise RuntimeError(f"no block of {count} free ports found")


def generate_only(config: CloudConfig, matrix: ConnectivityMatrix | None = None,
                  out_dir=None, emit_trace: bool = False) -> CloudManifest:
    trace = GenerationTrace()
    manifest = generate_cloud(config, matrix, trace)
    if out_dir is not None:
        write_manifest(manifest, out_dir)
        if emit_trace:
            (Path(out_dir) / "trace.txt").write_text(trace.to_text())
    return manifest


def _write_lines(path: Path, lines) -> Path:
    path.write_text("".join(line + "\n" for line in lines))
    return path


def _write_logs(path: Path, logs: dict[int, list[RequestRecord]]):
    with open(path, "w") as fh:
        for k in sorted(logs):
            for rec in logs[k]:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def _read_logs(path: Path) -> dict[int, list[RequestRecord]]:
    logs: dict[int, list[RequestRecord]] = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                rec = RequestRecord.from_dict(json.loads(line))
                logs.setdefault(rec.node_id, []).append(rec)
    return logs


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _run_external(command: str, seeds_file: Path, sink_url: str, hosts_file: Path | None,
                  timeout: float, out_dir: Path) -> tuple[int | None, bool]:
    subst = {"{seeds-file}": str(seeds_file), "{sink-url}": sink_url,
             "{hosts-file}": str(hosts_file or "")}
    for key, value in subst.items():
        command = command.replace(key, value)
    env = dict(os.environ,
               CRAWLBENCH_SEEDS_FILE=str(seeds_file),
               CRAWLBENCH_SINK_URL=sink_url,
               CRAWLBENCH_HOSTS_FILE=str(hosts_file or ""))
    with open(out_dir / "crawler.log", "wb") as logf:
        proc = subprocess.Popen(shlex.split(command), env=env, stdout=logf, stderr=subprocess.STDOUT)
        try:
            return proc.wait(timeout=timeout), False
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            return proc.returncode, True


def _run_reference(seeds, sink_url: str, options: CrawlOptions, hosts: dict,
                   timeout: float) -> tuple[int | None, bool]:
    if hosts:
        options.hosts = {**hosts, **options.hosts}
    crawler = Crawler(sink_url, options)
    result = {}
    t = threading.Thread(target=lambda: result.update(code=crawler.crawl(seeds)),
                         name="reference-crawler", daemon=True)
    t.start()
    t.join(timeout)
    if t.is_alive():
        crawler.stop()
        t.join()
        return result.get("code"), True
    return result.get("code", 1), False


def run_benchmark(
    config: CloudConfig,
    matrix: ConnectivityMatrix | None = None,
    crawler: CrawlerLaunch | None = None,
    out_dir=None,
    timeout: float = DEFAULT_TIMEOUT,
    emit_trace: bool = False,
    sink_port: int = 0,
) -> RunReport:
    """Generate the cloud, serve it, run the crawler, evaluate.

    Writes ``manifest/``, ``seeds.txt``, ``hosts.txt``, ``requests.jsonl``, ``sink.nt``,
    ``run.json``, ``report.json``, ``report.txt`` and ``cloud.dot`` into
    ``out_dir`` (a fresh temporary directory when omitted).
    """
    import tempfile

    crawler = crawler or CrawlerLaunch()
    out = Path(out_dir) if out_dir is not None else Path(tempfile.mkdtemp(prefix="crawlbench-"))
    out.mkdir(parents=True, exist_ok=True)
    started_at = _now_iso()

    manifest = generate_only(config, matrix, out / "manifest", emit_trace)
    store = SinkStore()
    sink = SinkServer(store, port=sink_port).start()
    cloud = Cloud(manifest)
    try:
        cloud.start()
        seeds_file = _write_lines(out / "seeds.txt", manifest.seed_uris())
        hosts = cloud.hosts_mapping()
        # always present so "{hosts-file}" never substitutes to nothing
        hosts_file = _write_lines(out / "hosts.txt", [f"{v} {a}" for v, a in sorted(hosts.items())])
        log.info("cloud of %d nodes up, %d seeds, sink at %s",
                 len(manifest.nodes), len(manifest.web_graph.seeds), sink.url)

        start_ns = time.monotonic_ns()
        if crawler.reference:
            code, timed_out = _run_reference(manifest.seed_uris(), sink.url, crawler.options,
                                             hosts, timeout)
        else:
            code, timed_out = _run_external(crawler.command, seeds_file, sink.url, hosts_file,
                                            timeout, out)
        end_ns = time.monotonic_ns()
        logs = cloud.drain_request_logs()
        snap = store.snapshot()
    finally:
        cloud.stop()
        sink.stop()

    _write_logs(out / "requests.jsonl", logs)
    (out / "sink.nt").write_text(store.dump())
    (out / "run.json").write_text(json.dumps(
        {"start_ns": start_ns, "end_ns": end_ns, "arrivals_ns": snap.arrivals_ns,
         "timed_out": timed_out, "crawler_exit_code": code,
         "started_at": started_at, "finished_at": _now_iso()}, sort_keys=True))
    report = evaluate(manifest, snap.lines, logs, start_ns, end_ns, snap.arrivals_ns,
                      timed_out=timed_out, crawler_exit_code=code,
                      started_at=started_at, finished_at=_now_iso())
    write_report(report, manifest, out)
    return report


def write_report(report: RunReport, manifest: CloudManifest, out: Path):
    out = Path(out)
    (out / "report.json").write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    (out / "report.txt").write_text(report.summary())
    (out / "cloud.dot").write_text(export_dot(manifest, report))


def evaluate_run(out_dir) -> RunReport:
    """Recompute the report of a finished run from its saved artifacts."""
    out = Path(out_dir)
    manifest = read_manifest(out / "manifest")
    run = json.loads((out / "run.json").read_text())
    sink_lines = [line for line in (out / "sink.nt").read_text().splitlines() if line.strip()]
    logs = _read_logs(out / "requests.jsonl")
    return evaluate(manifest, sink_lines, logs, run["start_ns"], run["end_ns"],
                    run.get("arrivals_ns", []), timed_out=run.get("timed_out", False),
                    crawler_exit_code=run.get("crawler_exit_code"),
                    started_at=run.get("started_at"), finished_at=run.get("finished_at"))


class ServedCloud:
    """A running cloud plus sink, for pointing third-party crawlers at."""

    def __init__(self, manifest: CloudManifest, sink_port: int = 0):
        self.manifest = manifest
        self.store = SinkStore()
        self.sink = SinkServer(self.store, port=sink_port)
        self.cloud = Cloud(manifest)

    def start(self) -> ServedCloud:
        self.sink.start()
        try:
            self.cloud.start()
        except OSError:
            self.sink.stop()
            raise
        return self

    def stop(self, out_dir=None):
        logs = self.cloud.drain_request_logs()
        self.cloud.stop()
        self.sink.stop()
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            _write_logs(out / "requests.jsonl", logs)
            (out / "sink.nt").write_text(self.store.dump())
        return logs


def serve_only(manifest_dir, sink_port: int = 0, out_dir=None,
               stop_event: threading.Event | None = None, announce=print) -> dict:
    """Serve a saved manifest until ``stop_event`` is set or Ctrl-C."""
    served = ServedCloud(read_manifest(manifest_dir), sink_port).start()
    announce(f"sink: {served.sink.url}")
    for uri in served.manifest.seed_uris():
        announce(f"seed: {uri}")
    for virtual, actual in sorted(served.cloud.hosts_mapping().items()):
        announce(f"host: {virtual} {actual}")
    stop_event = stop_event or threading.Event()
    try:
        while not stop_event.wait(0.2):
            pass
    except KeyboardInterrupt:
        pass
    return served.stop(out_dir)
