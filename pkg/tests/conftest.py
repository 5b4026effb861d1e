import numpy as np
import pytest

from graphfilter.sparse import Graph


def erdos_renyi(rng, n, p, weighted=False):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    w = rng.uniform(0.5, 2.0, keep.sum()) if weighted else None
    return Graph.from_edges(n, iu[keep], ju[keep], w)


def sbm(rng, sizes, p_in, p_out):
    blocks = np.repeat(np.arange(len(sizes)), sizes)
    n = blocks.size
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(blocks[iu] == blocks[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    return Graph.from_edges(n, iu[keep], ju[keep])


def random_graph(rng, n_max=30, weighted=None):
    """Mixed ER / two-block SBM graph with 3..n_max vertices and at least one edge."""
    while True:
        g = _draw_graph(rng, n_max, weighted)
        if g.n_edges:
            return g


def _draw_graph(rng, n_max, weighted):
    n = int(rng.integers(3, n_max + 1))
    if weighted is None:
        weighted = bool(rng.random() < 0.3)
    if rng.random() < 0.5:
        return erdos_renyi(rng, n, rng.uniform(0.1, 0.6), weighted)
    a = n // 2
    return sbm(rng, [a, n - a], rng.uniform(0.3, 0.8), rng.uniform(0.0, 0.1))


def complete(n):
    iu, ju = np.triu_indices(n, 1)
    return Graph.from_edges(n, iu, ju)


def cycle(n):
    i = np.arange(n)
    return Graph.from_edges(n, i, (i + 1) % n)


def path(n):
    i = np.arange(n - 1)
    return Graph.from_edges(n, i, i + 1)


def disjoint(*graphs):
    src, dst, w, off = [], [], [], 0
    for g in graphs:
        a = g.adjacency
        r = a.row_ids()
        up = r < a.col_indices
        src.append(r[up] + off)
        dst.append(a.col_indices[up] + off)
        w.append(a.values[up])
        off += g.n
    return Graph.from_edges(off, np.concatenate(src), np.concatenate(dst), np.concatenate(w))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
