"""Shared fixtures and independent pure-Python oracles.

The oracles here deliberately avoid the package's compiled kernels: distances
come from Bellman-Ford over the raw edge list, longest matches from a brute
substring scan. Tests compare the fast paths against these.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from splz import RawGraph, normalize
from splz.generate import grid_graph, random_geometric_graph, star_graph

DATA_DIR = Path(__file__).parent / "data"

# Six-vertex fixture: directed, weights chosen so all six trees are unique.
# Matches tests/data/tiny.gr.
GOLDEN_EDGES = [
    (0, 2, 1), (1, 2, 1), (2, 0, 1), (2, 1, 1), (2, 3, 2), (2, 4, 3),
    (3, 2, 2), (3, 5, 2), (4, 2, 3), (4, 5, 4), (5, 2, 9), (5, 3, 2),
    (5, 4, 4),
]
GOLDEN_COORDS = np.array(
    [(-10, 0), (0, 10), (0, 0), (10, 0), (0, -10), (7, 7)], np.int64
)

# Expected last-move tables per source, and token streams against the
# dictionary tree of vertex 2 (location, length; length 0 marks a literal).
GOLDEN_LOCAL = {
    0: [0, 0, 0, 0, 0, 0],
    1: [0, 0, 1, 0, 0, 0],
    2: [0, 0, 0, 0, 0, 0],
    3: [0, 0, 2, 0, 0, 0],
    4: [0, 0, 3, 0, 0, 1],
    5: [0, 0, 2, 1, 1, 0],
}
GOLDEN_GLOBAL = {
    0: [-1, 2, 0, 2, 2, 3],
    1: [2, -1, 1, 2, 2, 3],
    2: [2, 2, -1, 2, 2, 3],
    3: [2, 2, 3, -1, 2, 3],
    4: [2, 2, 4, 2, -1, 4],
    5: [2, 2, 3, 5, 5, -1],
}
GOLDEN_PAIRS = {
    0: [(0, 6)],
    1: [(0, 2), (1, 0), (0, 3)],
    3: [(0, 2), (2, 0), (0, 3)],
    4: [(0, 2), (3, 0), (0, 2), (1, 0)],
    5: [(0, 2), (2, 0), (1, 0), (1, 0), (0, 1)],
}


def golden_raw() -> RawGraph:
    return RawGraph(
        vertex_count=6, edges=list(GOLDEN_EDGES), coords=GOLDEN_COORDS.copy()
    )


@pytest.fixture(scope="session")
def golden_graph():
    return normalize(golden_raw())


@pytest.fixture(scope="session")
def grid10():
    return normalize(grid_graph(10, 10))


@pytest.fixture(scope="session")
def grid20():
    return normalize(grid_graph(20, 20))


@pytest.fixture(scope="session")
def split_star():
    """Star with 20 spokes: the center's in-degree forces one virtual vertex."""
    return normalize(star_graph(20))


def small_corpus():
    """(name, RawGraph) pairs for oracle sweeps at module-test scale."""
    return [
        ("grid-5x5", grid_graph(5, 5)),
        ("grid-7x4", grid_graph(7, 4)),
        ("rgg-60", random_geometric_graph(60, 0.25, seed=11)),
        ("rgg-120-sparse", random_geometric_graph(120, 0.09, seed=12)),
        ("star-20", star_graph(20)),
        ("star-40", star_graph(40)),
    ]


# ---------------------------------------------------------------------------
# Oracles


def bellman_ford(n: int, edges, source: int) -> list:
    """Reference distances; math.inf where unreachable."""
    dist = [math.inf] * n
    dist[source] = 0
    for _ in range(n):
        changed = False
        for t, h, w in edges:
            if dist[t] + w < dist[h]:
                dist[h] = dist[t] + w
                changed = True
        if not changed:
            break
    return dist


def brute_longest_match(dictionary: bytes, data: bytes, pos: int):
    """(location, length) of the longest dictionary match for data[pos:],
    smallest location on ties; (-1, 0) when even one byte cannot match."""
    best_loc, best_len = -1, 0
    nd, ns = len(dictionary), len(data)
    for loc in range(nd):
        k = 0
        while loc + k < nd and pos + k < ns and dictionary[loc + k] == data[pos + k]:
            k += 1
        if k > best_len:
            best_loc, best_len = loc, k
    return best_loc, best_len


def brute_greedy_tokens(dictionary: bytes, data: bytes):
    """Reference greedy parse as (location, length) pairs, literals length 0."""
    out = []
    pos = 0
    while pos < len(data):
        loc, length = brute_longest_match(dictionary, data, pos)
        if length >= 1:
            out.append((loc, length))
            pos += length
        else:
            out.append((data[pos], 0))
            pos += 1
    return out


def tree_dist_oracle(graph, spt) -> list:
    """Per-vertex chain walk (O(n^2), test sizes only); math.inf where the
    chain cannot reach the source."""
    n = graph.vertex_count
    out = []
    for v in range(n):
        u = v
        total = 0
        seen = set()
        while u != spt.source:
            if u in seen:
                total = math.inf  # cycle: unreachable
                break
            seen.add(u)
            tails, weights = graph.in_adj(u)
            if len(tails) == 0:
                total = math.inf
                break
            local = int(spt.last_move[u])
            total += int(weights[local])
            u = int(tails[local])
        out.append(total)
    return out
