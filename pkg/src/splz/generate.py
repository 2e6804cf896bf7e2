"""Synthetic road-network-like graphs for tests, benchmarks, and experiments."""

from __future__ import annotations

import numpy as np

from .graphs import RawGraph


def grid_graph(rows: int, cols: int, *, weight: int = 1, spacing: int = 100) -> RawGraph:
    """Bidirected rows x cols grid with uniform edge weights and grid coords."""
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, weight))
                edges.append((v + 1, v, weight))
            if r + 1 < rows:
                edges.append((v, v + cols, weight))
                edges.append((v + cols, v, weight))
    coords = np.empty((n, 2), dtype=np.int64)
    ids = np.arange(n)
    coords[:, 0] = (ids % cols) * spacing
    coords[:, 1] = (ids // cols) * spacing
    return RawGraph(vertex_count=n, edges=edges, coords=coords)


def random_geometric_graph(
    n: int, radius: float, seed: int, *, scale: int = 10_000
) -> RawGraph:
    """Points in the unit square, bidirected edges between pairs within radius.

    Weights are the rounded Euclidean distances (at least 1), coordinates the
    integer-scaled point positions. Small radii can leave the graph
    disconnected, which is useful for exercising unreachable-vertex handling.
    """
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    coords = np.round(pts * scale).astype(np.int64)
    edges = []
    # O(n^2) pair scan is fine at the sizes this generator is used for.
    r2 = radius * radius
    for i in range(n):
        d2 = np.sum((pts[i + 1 :] - pts[i]) ** 2, axis=1)
        for j in np.flatnonzero(d2 <= r2):
            k = i + 1 + int(j)
            w = max(1, int(round(float(np.sqrt(d2[j])) * scale)))
            edges.append((i, k, w))
            edges.append((k, i, w))
    return RawGraph(vertex_count=n, edges=edges, coords=coords)


def star_graph(spokes: int, *, center_out: bool = True) -> RawGraph:
    """Star with every spoke pointing into the center.

    With more than 16 spokes the center's in-degree exceeds the local-index
    alphabet, forcing virtual-vertex splits during normalization. Distinct
    spoke weights keep shortest paths unique.
    """
    n = spokes + 1
    center = spokes
    edges = []
    for s in range(spokes):
        edges.append((s, center, s + 1))
        if center_out:
            edges.append((center, s, s + 1))
    coords = np.zeros((n, 2), dtype=np.int64)
    angles = 2 * np.pi * np.arange(spokes) / max(spokes, 1)
    coords[:spokes, 0] = np.round(1000 * np.cos(angles)).astype(np.int64)
    coords[:spokes, 1] = np.round(1000 * np.sin(angles)).astype(np.int64)
    return RawGraph(vertex_count=n, edges=edges, coords=coords)
