"""Shared helpers for the test-suite: random graphs and functions."""

import numpy as np

from grapde.graph import WeightedGraph


def random_graph(rng, n=None, connected=True):
    """Random weighted graph with positive data; spanning tree keeps it connected."""
    if n is None:
        n = int(rng.integers(2, 9))
    ids = [f"n{i}" for i in range(n)]
    vertices = [
        (ids[i], float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.2, 3.0)),
         float(rng.uniform(0.2, 3.0)))
        for i in range(n)
    ]
    edges = {}
    if connected:
        for i in range(1, n):
            j = int(rng.integers(0, i))
            edges[(j, i)] = float(rng.uniform(0.2, 2.0))
    extra = int(rng.integers(0, n))
    for _ in range(extra):
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        edges.setdefault((int(i), int(j)), float(rng.uniform(0.2, 2.0)))
    return WeightedGraph.build(
        vertices, [(ids[i], ids[j], w) for (i, j), w in edges.items()]
    )


def random_function(rng, graph):
    return rng.standard_normal(graph.n)
