import numpy as np
import pytest

from grafica import AttributedGraph, Partition


def random_graph(rng, n, p=3, density=0.3, labels=None):
    upper = np.triu(rng.random((n, n)) < density, k=1)
    adj = (upper | upper.T).astype(float)
    return AttributedGraph(adj, rng.standard_normal((n, p)), labels=labels)


def random_partition(rng, n, k):
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    rng.shuffle(labels)
    return Partition(labels, k)


def brute_intra_inter(x, labels, vols):
    """Literal double sums over ordered pairs: (intra, inter)."""
    n = x.shape[0]
    intra = inter = 0.0
    for i in range(n):
        for j in range(n):
            d = float(np.sum((x[i] - x[j]) ** 2))
            w = 1.0 / vols[labels[i]]
            if labels[i] == labels[j]:
                intra += w * d
            else:
                inter += w * d
    return intra, inter


def brute_dissimilarity(x):
    n = x.shape[0]
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            w[i, j] = sum((x[i, a] - x[j, a]) ** 2 for a in range(x.shape[1]))
    return w


def rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
