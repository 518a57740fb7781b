"""Graph families shared by the experiment scripts."""

from __future__ import annotations

import networkx as nx
import numpy as np

from semistream.graph import EdgeStream

FAMILIES = ("3-regular", "gnp", "cliques")


def edges_of(kind: str, n: int, seed: int) -> list[tuple[int, int]]:
    if kind == "3-regular":
        g = nx.random_regular_graph(3, n, seed=seed)
    elif kind == "gnp":
        g = nx.gnp_random_graph(n, 4 / n, seed=seed)
    elif kind == "cliques":
        # disjoint triangles and 5-cliques, linked by n / 8 random edges
        rng = np.random.default_rng(seed)
        g, start = nx.Graph(), 0
        while start + 3 <= n:
            size = 5 if start + 5 <= n and rng.random() < 0.5 else 3
            g.add_edges_from(nx.complete_graph(range(start, start + size)).edges())
            start += size
        for _ in range(n // 8):
            a, b = rng.choice(n, 2, replace=False)
            g.add_edge(int(a), int(b))
    else:
        raise ValueError(f"unknown family {kind!r}")
    return sorted((min(a, b), max(a, b)) for a, b in g.edges())


def stream_of(n: int, edges, weights=None) -> EdgeStream:
    w = np.ones(len(edges)) if weights is None else np.asarray(weights, float)
    return EdgeStream(n, [a for a, _ in edges], [b for _, b in edges], w)


def optimum(n: int, edges, weights=None) -> float:
    g = nx.Graph()
    w = np.ones(len(edges)) if weights is None else weights
    g.add_weighted_edges_from((a, b, float(x)) for (a, b), x in zip(edges, w))
    return float(sum(g[a][b]["weight"] for a, b in nx.max_weight_matching(g)))
