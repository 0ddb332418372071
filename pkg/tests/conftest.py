import contextlib
from collections import deque

import pytest

from crawlbench.harness import ServedCloud, find_free_base_port


def with_free_ports(cfg):
    """Move a config onto a block of currently unused ports."""
    return cfg.with_(base_port=find_free_base_port(cfg.node_count))


@contextlib.contextmanager
def serving(manifest):
    served = ServedCloud(manifest).start()
    try:
        yield served
    finally:
        served.stop()


def bfs_oracle(adj, seeds):
    """Independent reachability: plain BFS over an adjacency dict."""
    seen, queue = set(seeds), deque(seeds)
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def closure_oracle(n, edges):
    """Reachability matrix by Warshall's transitive closure."""
    reach = [[i == j for j in range(n)] for i in range(n)]
    for u, v in edges:
        reach[u][v] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_k = reach[k]
                row_i = reach[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return reach


@pytest.fixture
def free_ports():
    return with_free_ports


_acceptance: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed_setup = rep.when == "setup" and not rep.passed
    if rep.when == "call" or failed_setup:
        label = marker.args[0]
        if hasattr(item, "callspec"):
            label += f" [{item.callspec.id}]"
        _acceptance.append((label, "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in sorted(_acceptance, key=lambda x: int(x[0].split()[0])):
        terminalreporter.write_line(f"{status}  criterion {label}")
