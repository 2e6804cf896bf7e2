"""Spatial region partitioning and dictionary-chain assignment.

Vertices are clustered by k-means on their coordinates into about
``c * sqrt(|V|)`` regions. Each region's root is the member nearest the
region's geometric center; the root's tree is the region dictionary. With a
finite ``len_to_dic`` every other member compresses against the tree of an
ancestor ``len_to_dic`` steps up the root's tree (multi-step chains);
``len_to_dic = inf`` compresses everything directly against the dictionary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PartitionError
from .graphs import NO_PREDECESSOR, Graph, Spt, to_global

ROOT_DICT = -1  # dict_parent sentinel: compress against the region dictionary

KMEANS_MAX_ITER = 25


@dataclass
class RegionPlan:
    """Per-vertex region membership, roots, and dictionary-chain parents.

    ``dict_parent[v]`` is ROOT_DICT when v compresses straight against its
    region dictionary, else the vertex whose tree is v's dictionary.
    ``depth[v]`` counts the chained ancestor expansions above v (0 for
    ROOT_DICT vertices and for roots themselves); a query of v therefore
    performs depth[v] + 1 decompression passes, or none when v is a root.
    """

    region_count: int
    region_of: np.ndarray  # int32 (vertex_count,)
    root_of: np.ndarray  # int32 (region_count,)
    dict_parent: np.ndarray  # int32 (vertex_count,), ROOT_DICT or vertex id
    depth: np.ndarray  # int32 (vertex_count,)
    len_to_dic: float  # int >= 1, or math.inf for one-step compression

    def is_root(self, v: int) -> bool:
        return int(self.root_of[self.region_of[v]]) == int(v)


def region_count_for(real_vertex_count: int, c: float) -> int:
    """round(c * sqrt(n)), at least 1, at most n."""
    if c <= 0:
        raise ValueError("region scale c must be positive")
    k = int(math.floor(c * math.sqrt(real_vertex_count) + 0.5))
    return max(1, min(k, real_vertex_count))


def kmeans_partition(graph: Graph, c: float, seed: int) -> tuple[np.ndarray, int]:
    """Cluster real vertices by coordinates; virtual vertices inherit regions.

    Plain k-means with squared Euclidean distance, k-means++ seeding from the
    given seed, at most KMEANS_MAX_ITER iterations. Empty clusters are
    re-seeded from the point farthest from its assigned center, so every
    region ends up non-empty. Deterministic given the seed.
    """
    if graph.coords is None:
        raise PartitionError(
            "graph has no coordinates; spatial partitioning needs them "
            "(no metric-free fallback is provided)"
        )
    k = region_count_for(graph.real_count, c)
    pts = graph.coords.astype(np.float64)
    assign = _kmeans(pts, k, seed)
    region_of = np.empty(graph.vertex_count, np.int32)
    region_of[: graph.real_count] = assign
    for v in range(graph.real_count, graph.vertex_count):
        region_of[v] = assign[graph.origin[v]]
    return region_of, k


def _sq_dist_to(pts: np.ndarray, center: np.ndarray) -> np.ndarray:
    d = pts - center
    return d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]


def _kmeans(pts: np.ndarray, k: int, seed: int) -> np.ndarray:
    n = len(pts)
    rng = np.random.default_rng(seed)
    centers = np.empty((k, 2), np.float64)
    centers[0] = pts[rng.integers(n)]
    closest = _sq_dist_to(pts, centers[0])
    for j in range(1, k):
        total = float(closest.sum())
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))  # all residual distances zero
        centers[j] = pts[idx]
        np.minimum(closest, _sq_dist_to(pts, centers[j]), out=closest)

    assign = np.full(n, -1, np.int64)
    block = 8192
    for _ in range(KMEANS_MAX_ITER):
        new_assign = np.empty(n, np.int64)
        for lo in range(0, n, block):
            chunk = pts[lo : lo + block]
            d2 = (
                (chunk[:, None, :] - centers[None, :, :]) ** 2
            ).sum(axis=2)
            new_assign[lo : lo + block] = np.argmin(d2, axis=1)
        _reseed_empty(new_assign, pts, centers, k)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for r in range(k):
            centers[r] = pts[assign == r].mean(axis=0)
    return assign


def _reseed_empty(assign: np.ndarray, pts, centers, k: int) -> None:
    """Give every empty cluster the point farthest from its own center.

    Only points from clusters with at least two members are taken, so the
    fix never empties another cluster; each donor is used once.
    """
    counts = np.bincount(assign, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if len(empty) == 0:
        return
    dist_own = np.linalg.norm(pts - centers[assign], axis=1)
    for r in empty:
        dist_own[counts[assign] < 2] = -1.0
        far = int(np.argmax(dist_own))
        counts[assign[far]] -= 1
        counts[r] += 1
        assign[far] = r
        dist_own[far] = -1.0


def choose_roots(graph: Graph, region_of: np.ndarray) -> np.ndarray:
    """Per region, the real member nearest the mean member coordinate.

    Ties go to the smaller vertex id; virtual vertices are never roots.
    """
    if graph.coords is None:
        raise PartitionError("choose_roots needs coordinates")
    k = int(region_of[: graph.real_count].max()) + 1
    root_of = np.full(k, -1, np.int32)
    regions = region_of[: graph.real_count]
    pts = graph.coords.astype(np.float64)
    for r in range(k):
        members = np.flatnonzero(regions == r)
        if len(members) == 0:
            raise PartitionError(f"region {r} is empty")
        center = pts[members].mean(axis=0)
        d2 = _sq_dist_to(pts[members], center)
        root_of[r] = members[int(np.argmin(d2))]  # argmin takes first on ties
    return root_of


def assign_dict_parents(
    graph: Graph,
    region_of: np.ndarray,
    root_of: np.ndarray,
    root_spts: dict[int, Spt] | list[Spt] | None,
    len_to_dic,
) -> RegionPlan:
    """Walk each root tree to pick every member's dictionary.

    ``dict_parent[v]`` is the ancestor exactly ``len_to_dic`` real steps up
    the root's tree, or ROOT_DICT when the walk reaches the root, leaves the
    region, or runs out of ancestors first. Virtual vertices inherit their
    origin's assignment. ``root_spts`` maps region -> the root's tree; it may
    be None only for ``len_to_dic = inf``, which needs no walks.
    """
    n = graph.vertex_count
    k = len(root_of)
    dict_parent = np.full(n, ROOT_DICT, np.int32)
    depth = np.zeros(n, np.int32)
    d = float(len_to_dic)
    if not (d >= 1):
        raise ValueError("len_to_dic must be >= 1 or inf")

    if math.isfinite(d):
        steps = int(d)
        if steps != d:
            raise ValueError("finite len_to_dic must be an integer")
        if root_spts is None:
            raise ValueError("root_spts required for finite len_to_dic")
        for r in range(k):
            root = int(root_of[r])
            spt = root_spts[r]
            if spt.source != root:
                raise ValueError(
                    f"root_spts[{r}] is for source {spt.source}, root is {root}"
                )
            # Real-parent links with virtual clones collapsed away.
            parent_real = to_global(spt, graph)
            members = np.flatnonzero(region_of[: graph.real_count] == r)
            for v in members:
                v = int(v)
                if v == root:
                    continue
                u = v
                for _ in range(steps):
                    u = int(parent_real[u])
                    if u == NO_PREDECESSOR or u == root:
                        u = ROOT_DICT
                        break
                    if region_of[u] != r:
                        u = ROOT_DICT  # walk left the region
                        break
                dict_parent[v] = u

        _fill_depths(dict_parent, depth, graph.real_count)

    # Virtual vertices are zero-distance clones: same region, same dictionary.
    for v in range(graph.real_count, n):
        o = int(graph.origin[v])
        dict_parent[v] = dict_parent[o]
        depth[v] = depth[o]

    return RegionPlan(
        region_count=k,
        region_of=np.asarray(region_of, np.int32),
        root_of=np.asarray(root_of, np.int32),
        dict_parent=dict_parent,
        depth=depth,
        len_to_dic=d,
    )


def _fill_depths(dict_parent: np.ndarray, depth: np.ndarray, n_real: int) -> None:
    done = np.zeros(n_real, bool)
    for v in range(n_real):
        chain = []
        u = v
        while not done[u] and dict_parent[u] != ROOT_DICT:
            chain.append(u)
            u = int(dict_parent[u])
        base = depth[u] if done[u] else 0
        done[u] = True
        for w in reversed(chain):
            base += 1
            depth[w] = base
            done[w] = True


def build_plan(
    graph: Graph, c: float, seed: int, len_to_dic, root_spts_for=None
) -> RegionPlan:
    """Partition, pick roots, and assign chains in one call.

    ``root_spts_for(root_vertices) -> list[Spt]`` supplies root trees when a
    finite ``len_to_dic`` needs them (kept injectable so builders can share
    precomputed sweeps).
    """
    region_of, _ = kmeans_partition(graph, c, seed)
    root_of = choose_roots(graph, region_of)
    root_spts = None
    if math.isfinite(float(len_to_dic)):
        if root_spts_for is None:
            raise ValueError("root_spts_for required for finite len_to_dic")
        root_spts = root_spts_for([int(r) for r in root_of])
    return assign_dict_parents(graph, region_of, root_of, root_spts, len_to_dic)
