import json
import shlex
import sys
import threading
import time
import urllib.request

import pytest

from crawlbench.cli import build_parser, main
from crawlbench.harness import (CrawlerLaunch, evaluate_run, find_free_base_port, load_config,
                                ports_free, run_benchmark, serve_only)
from crawlbench.manifest import read_manifest
from crawlbench.model import CloudConfig, NodeType
from crawlbench.presets import PRESETS, data_web, efficiency, robots

from conftest import with_free_ports

PY = shlex.quote(sys.executable)


def _small(seed=5, **kw):
    return with_free_ports(CloudConfig(node_count=10, type_weights={NodeType.DEREFERENCING: 1},
                                       avg_node_degree=3, triples_per_graph=50, seed=seed, **kw))


def test_load_config_from_toml(tmp_path):
    rows = [[1] * 5 for _ in range(5)]
    rows[3][1] = 0
    path = tmp_path / "cloud.toml"
    path.write_text("node_count = 7\ntriples_per_graph = 33\nseed = 4\n"
                    f"connectivity = {json.dumps(rows)}\n")
    cfg, matrix = load_config(path, seed=9, crawl_delay=None)
    assert (cfg.node_count, cfg.triples_per_graph, cfg.seed) == (7, 33, 9)
    assert matrix.to_list() == rows


def test_load_config_on_preset():
    cfg, _ = load_config(None, robots(), node_count=5)
    assert cfg.node_count == 5 and cfg.disallowed_ratio == 0.1


def test_presets_shape():
    assert set(PRESETS) == {"data-web", "efficiency", "robots"}
    assert data_web().node_count == 100 and data_web().avg_node_degree == 20
    assert efficiency().node_count == 200
    assert robots().crawl_delay == 10 and robots().node_count == 25


def test_free_port_search():
    base = find_free_base_port(5)
    assert ports_free(base, 5)


def test_reference_run_writes_artifacts(tmp_path):
    report = run_benchmark(_small(), out_dir=tmp_path)
    assert report.micro_recall == 1 and not report.timed_out
    assert report.crawler_exit_code == 0
    for name in ("manifest/manifest.json", "hosts.txt", "seeds.txt", "requests.jsonl", "sink.nt",
                 "run.json", "report.json", "report.txt", "cloud.dot"):
        assert (tmp_path / name).exists(), name
    again = evaluate_run(tmp_path)
    assert again.to_dict() == report.to_dict()
    series = report.triples_over_time
    assert [c for _, c in series] == sorted(c for _, c in series)
    assert series[-1][1] == report.expected_total


def test_external_crawler_command(tmp_path):
    cmd = (f"{PY} -m crawlbench.cli crawl --seeds-file {{seeds-file}} "
           f"--sink-url {{sink-url}} --hosts-file {{hosts-file}}")
    report = run_benchmark(_small(seed=6), crawler=CrawlerLaunch(cmd), out_dir=tmp_path)
    assert report.micro_recall == 1 and report.crawler_exit_code == 0


def test_crawler_that_exits_at_once(tmp_path):
    report = run_benchmark(_small(), crawler=CrawlerLaunch(f"{PY} -c pass"), out_dir=tmp_path)
    assert report.micro_recall == 0 and report.crawler_exit_code == 0
    assert report.triples_over_time == []


def test_timeout_is_reported(tmp_path):
    t0 = time.monotonic()
    report = run_benchmark(_small(), crawler=CrawlerLaunch(f"{PY} -c 'import time; time.sleep(30)'"),
                           out_dir=tmp_path, timeout=1)
    assert report.timed_out and time.monotonic() - t0 < 20
    assert json.loads((tmp_path / "run.json").read_text())["timed_out"] is True


def test_serve_only_shuts_down_and_flushes(tmp_path):
    cfg = _small()
    main(["generate", "--out-dir", str(tmp_path / "m"), "--seed", "5",
          "--node-count", "3", "--base-port", str(cfg.base_port)])
    lines, stop = [], threading.Event()
    t = threading.Thread(target=serve_only, args=(tmp_path / "m",),
                         kwargs=dict(out_dir=tmp_path / "out", stop_event=stop,
                                     announce=lines.append))
    t.start()
    deadline = time.monotonic() + 10
    while not any(s.startswith("seed:") for s in lines) and time.monotonic() < deadline:
        time.sleep(0.05)
    seed = next(s.split(" ", 1)[1] for s in lines if s.startswith("seed:"))
    with urllib.request.urlopen(seed, timeout=10) as r:
        assert r.status == 200
    stop.set()
    t.join(10)
    assert not t.is_alive()
    assert (tmp_path / "out" / "requests.jsonl").read_text().strip()
    assert ports_free(cfg.base_port, 3)


def test_cli_generate_run_evaluate(tmp_path, capsys):
    base = find_free_base_port(8)
    assert main(["generate", "--preset", "efficiency", "--node-count", "8",
                 "--triples-per-graph", "20", "--emit-trace",
                 "--out-dir", str(tmp_path / "gen")]) == 0
    assert "8 nodes" in capsys.readouterr().out
    assert (tmp_path / "gen" / "trace.txt").exists()
    assert len(read_manifest(tmp_path / "gen").nodes) == 8
    assert main(["run", "--node-count", "8", "--triples-per-graph", "20",
                 "--base-port", str(base), "--reference-crawler",
                 "--out-dir", str(tmp_path / "run")]) == 0
    first = capsys.readouterr().out
    assert "recall" in first.lower()
    assert main(["evaluate", str(tmp_path / "run")]) == 0
    assert capsys.readouterr().out == first


def test_cli_rejects_two_crawlers():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--out-dir", "x", "--reference-crawler",
                                   "--crawler-cmd", "true"])
