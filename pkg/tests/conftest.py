import numpy as np
import pytest

from hinprop.graph import Schema, build_graph


@pytest.fixture
def small_graph():
    """3 users, 2 apps, 1 type; the running example used across modules.

    W_UA = [[2,1],[3,0],[0,0]], plus type lookups u1->t1 x1, u2->t1 x2.
    """
    schema = Schema.default()
    nodes = [("u1", "U", None), ("u2", "U", None), ("u3", "U", None),
             ("a1", "A", None), ("a2", "A", None), ("t1", "T", None)]
    edges = [("u1", "a1", 2), ("u1", "a2", 1), ("u2", "a1", 3),
             ("u1", "t1", 1), ("u2", "t1", 2)]
    graph, labels = build_graph(schema, nodes, edges)
    return graph


def random_hin(rng, max_nodes=20, edge_prob=0.25, max_weight=5):
    """Random three-type graph with independent Bernoulli edges.

    Node counts are uniform in 3..max_nodes per type and weights uniform in
    1..max_weight, covering both sparse and denser regimes.
    """
    schema = Schema.default()
    counts = {t: int(rng.integers(3, max_nodes + 1)) for t in ("U", "A", "T")}
    nodes = [(f"{t.lower()}{i}", t, None)
             for t in ("U", "A", "T") for i in range(counts[t])]
    edges = []
    for a, b in (("U", "A"), ("A", "T"), ("U", "T")):
        mask = rng.random((counts[a], counts[b])) < edge_prob
        weights = rng.integers(1, max_weight + 1, size=mask.shape)
        for i, j in zip(*np.nonzero(mask)):
            edges.append((f"{a.lower()}{i}", f"{b.lower()}{j}",
                          int(weights[i, j])))
    graph, _ = build_graph(schema, nodes, edges)
    return graph
