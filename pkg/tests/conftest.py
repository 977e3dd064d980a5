import numpy as np
import pytest

from evinet.graph import build_network


def net(edges, directed=False, name="g", nodes=None):
    return build_network(edges, directed=directed, name=name, nodes=nodes)


def random_network(rng, n, p, directed=False, name="g"):
    """Erdos-Renyi style network over labels 0..n-1 that keeps every node."""
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    if not directed:
        A = np.triu(A)
    labels = [str(i) for i in range(n)]
    edges = [(labels[i], labels[j]) for i, j in zip(*np.nonzero(A))]
    if not edges:
        edges = [(labels[0], labels[1])]
    return build_network(edges, directed=directed, name=name, nodes=labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
