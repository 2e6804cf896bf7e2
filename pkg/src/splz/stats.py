"""Analysis sweeps: tree similarity vs path length, and size decompositions.

Both emit deterministic CSV given a seed; sampling protocol parameters are
recorded as comment lines so runs are reproducible.
"""

from __future__ import annotations

import io
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _scipy_stats

from .archive import build_archive
from .graphs import Graph, Spt
from .partition import assign_dict_parents, choose_roots, kmeans_partition
from .sssp import dijkstra_spt, iter_spts, tree_path_len

# Full tree matrices are cached during sweeps only below this size (n^2 bytes).
SPT_CACHE_LIMIT = 20_000


def spearman(x, y) -> float:
    """Spearman rank correlation (average ranks on ties)."""
    rho = _scipy_stats.spearmanr(np.asarray(x), np.asarray(y)).statistic
    return float(rho)


class _SptCache:
    """Bounded FIFO cache of trees keyed by source."""

    def __init__(self, graph: Graph, capacity: int = 512):
        self.graph = graph
        self.capacity = capacity
        self._store: OrderedDict[int, Spt] = OrderedDict()

    def get(self, source: int) -> Spt:
        spt = self._store.get(source)
        if spt is None:
            spt = dijkstra_spt(self.graph, source)
            self._store[source] = spt
            if len(self._store) > self.capacity:
                self._store.popitem(last=False)
        return spt


def similarity_samples(
    graph: Graph, sample_pairs: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled (path_len, similarity) observations over real vertex pairs.

    path_len is the edge count of the tree path from u to v in u's tree;
    similarity is the fraction of equal last-move entries between the two
    trees. Pairs with no u->v path are dropped.
    """
    if sample_pairs < 1:
        raise ValueError("sample_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    n_real = graph.real_count
    us = rng.integers(0, n_real, sample_pairs)
    vs = rng.integers(0, n_real, sample_pairs)
    cache = _SptCache(graph)
    n = graph.vertex_count
    path_lens = []
    sims = []
    for u, v in zip(us, vs):
        u, v = int(u), int(v)
        spt_u = cache.get(u)
        pl = tree_path_len(graph, spt_u, v)
        if pl < 0:
            continue
        spt_v = cache.get(v)
        eq = int(np.count_nonzero(spt_u.last_move == spt_v.last_move))
        path_lens.append(pl)
        sims.append(eq / n)
    return np.asarray(path_lens, np.int64), np.asarray(sims, np.float64)


@dataclass
class SimilarityTable:
    rows: list[tuple[int, int, float]]  # (path_len, pairs, mean_similarity)
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        for k, v in self.metadata.items():
            out.write(f"# {k}={v}\n")
        out.write("path_len,pairs,mean_similarity\n")
        for pl, cnt, sim in self.rows:
            out.write(f"{pl},{cnt},{sim:.6f}\n")
        return out.getvalue()


def similarity_curve(graph: Graph, sample_pairs: int, seed: int) -> SimilarityTable:
    """Mean tree similarity bucketed by exact path length."""
    path_lens, sims = similarity_samples(graph, sample_pairs, seed)
    buckets: dict[int, list[float]] = {}
    for pl, s in zip(path_lens, sims):
        buckets.setdefault(int(pl), []).append(float(s))
    rows = [
        (pl, len(vals), float(np.mean(vals)))
        for pl, vals in sorted(buckets.items())
    ]
    return SimilarityTable(
        rows=rows,
        metadata={
            "pairs_requested": sample_pairs,
            "pairs_used": int(len(path_lens)),
            "seed": seed,
            "vertex_count": graph.vertex_count,
        },
    )


# ---------------------------------------------------------------------------
# Compression-ratio sweeps


class _CountingSink:
    def __init__(self):
        self.total = 0

    def write(self, b) -> int:
        self.total += len(b)
        return len(b)


@dataclass
class RatioRow:
    c: float
    len_to_dic: float
    regions: int
    archive_bytes: int
    dictionary_bytes: int
    stream_bytes: int
    index_bytes: int
    region_table_bytes: int
    raw_bytes: int = 0

    @property
    def ratio(self) -> float:
        return 0.0 if not self.archive_bytes else self.raw_bytes / self.archive_bytes

    @property
    def dictionary_proportion(self) -> float:
        return 0.0 if not self.archive_bytes else (
            self.dictionary_bytes / self.archive_bytes
        )


@dataclass
class RatioTable:
    rows: list[RatioRow]
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        for k, v in self.metadata.items():
            out.write(f"# {k}={v}\n")
        out.write(
            "c,len_to_dic,regions,archive_bytes,dictionary_bytes,"
            "stream_bytes,index_bytes,region_table_bytes,compression_ratio\n"
        )
        for r in self.rows:
            d = "inf" if math.isinf(r.len_to_dic) else str(int(r.len_to_dic))
            out.write(
                f"{r.c:g},{d},{r.regions},{r.archive_bytes},"
                f"{r.dictionary_bytes},{r.stream_bytes},{r.index_bytes},"
                f"{r.region_table_bytes},{r.ratio:.3f}\n"
            )
        return out.getvalue()


def _cached_spt_matrix(graph: Graph, threads=None) -> np.ndarray:
    mat = np.empty((graph.vertex_count, graph.vertex_count), np.uint8)
    for s, row in iter_spts(graph, range(graph.vertex_count), threads=threads):
        mat[s] = row
    return mat


def ratio_sweep(
    graph: Graph, c_values, d_values, seed: int, *, threads=None
) -> RatioTable:
    """Build one archive per (c, len_to_dic) pair and decompose its size.

    The tree sweep is shared across all combinations when the graph is small
    enough to cache the full matrix.
    """
    c_values = list(c_values)
    d_values = [float(d) for d in d_values]
    if not c_values or not d_values:
        raise ValueError("c_values and d_values must be non-empty")

    mat = None
    if graph.vertex_count <= SPT_CACHE_LIMIT:
        mat = _cached_spt_matrix(graph, threads=threads)

    def spt_source(sources):
        if mat is None:
            return iter_spts(graph, sources, threads=threads)
        return ((int(s), mat[int(s)]) for s in sources)

    def root_spts_for(roots):
        if mat is None:
            return [dijkstra_spt(graph, r) for r in roots]
        return [Spt(source=r, last_move=mat[r].copy()) for r in roots]

    raw_bytes = graph.vertex_count * graph.vertex_count
    rows = []
    for c in c_values:
        region_of, k = kmeans_partition(graph, c, seed)
        root_of = choose_roots(graph, region_of)
        root_spts = root_spts_for([int(r) for r in root_of])
        for d in d_values:
            plan = assign_dict_parents(graph, region_of, root_of, root_spts, d)
            sink = _CountingSink()
            header = build_archive(
                graph, plan, sink, seed=seed, spt_source=spt_source
            )
            dict_bytes = header.off_index - header.off_dictionaries
            index_bytes = header.off_streams - header.off_index
            rt_bytes = header.off_dictionaries - header.off_region_table
            stream_bytes = sink.total - header.off_streams
            rows.append(
                RatioRow(
                    c=float(c),
                    len_to_dic=d,
                    regions=k,
                    archive_bytes=sink.total,
                    dictionary_bytes=dict_bytes,
                    stream_bytes=stream_bytes,
                    index_bytes=index_bytes,
                    region_table_bytes=rt_bytes,
                    raw_bytes=raw_bytes,
                )
            )
    return RatioTable(
        rows=rows,
        metadata={
            "seed": seed,
            "vertex_count": graph.vertex_count,
            "raw_bytes": raw_bytes,
        },
    )
