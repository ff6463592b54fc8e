import numpy as np
import pytest

from got_align.graph import Graph


def random_graph(rng, n, p=0.5, weighted=False, connected=True):
    """Erdos-Renyi style test graph; resampled until connected if asked."""
    for _ in range(1000):
        mask = np.triu(rng.random((n, n)) < p, 1)
        W = mask * (rng.uniform(0.5, 2.0, (n, n)) if weighted else 1.0)
        g = Graph(W + W.T)
        if not connected or g.is_connected():
            return g
    raise RuntimeError("could not draw a connected graph")


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(1.0, cond, n)) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def report(number, name, passed, detail):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
