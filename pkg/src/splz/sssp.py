"""Exact single-source shortest-path trees with deterministic tie-breaking.

This module is both the preprocessing generator and the correctness oracle:
queries against a built archive must reproduce these trees byte for byte, so
everything here is deterministic.

Distances are computed with a binary-heap Dijkstra keyed on (distance, vertex
id), or with a Dial bucket queue when all edge weights are small positive
integers (the two agree exactly: distances are unique, and parent selection
below depends only on them in that regime). Parents are then chosen per
vertex as the smallest-id in-neighbor whose distance plus edge weight equals
the vertex's distance. On graphs with zero-weight edges (virtual-vertex
chains), equal-distance in-neighbors could form zero-weight parent cycles
under that rule alone, so there the choice is additionally restricted to
in-neighbors settled earlier in the heap's pop order, which keeps the tree
acyclic while staying deterministic.

The kernels are numba-compiled; the pure-Python reference used to validate
them lives in the test suite.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

import numba

from .graphs import Graph, Spt

INF = np.int64(1) << np.int64(62)

# Dial's bucket queue needs maxw+1 buckets and scans distance values one by
# one; keep it to genuinely small weights.
DIAL_MAX_WEIGHT = 64

UNREACHABLE = -1


@njit(cache=True)
def _heap_sssp(out_indptr, out_head, out_w, n, source):
    dist = np.full(n, INF, np.int64)
    rank = np.full(n, -1, np.int64)
    cap = len(out_head) + 2
    hd = np.empty(cap, np.int64)
    hv = np.empty(cap, np.int64)
    hd[0] = 0
    hv[0] = source
    size = 1
    dist[source] = 0
    settled = 0
    while size > 0:
        d = hd[0]
        u = hv[0]
        size -= 1
        hd[0] = hd[size]
        hv[0] = hv[size]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= size:
                break
            c = l
            r = l + 1
            if r < size and (hd[r] < hd[l] or (hd[r] == hd[l] and hv[r] < hv[l])):
                c = r
            if hd[c] < hd[i] or (hd[c] == hd[i] and hv[c] < hv[i]):
                hd[i], hd[c] = hd[c], hd[i]
                hv[i], hv[c] = hv[c], hv[i]
                i = c
            else:
                break
        if d != dist[u]:
            continue
        rank[u] = settled
        settled += 1
        for k in range(out_indptr[u], out_indptr[u + 1]):
            v = out_head[k]
            nd = d + out_w[k]
            if nd < dist[v]:
                dist[v] = nd
                j = size
                hd[j] = nd
                hv[j] = v
                size += 1
                while j > 0:
                    p = (j - 1) >> 1
                    if hd[j] < hd[p] or (hd[j] == hd[p] and hv[j] < hv[p]):
                        hd[j], hd[p] = hd[p], hd[j]
                        hv[j], hv[p] = hv[p], hv[j]
                        j = p
                    else:
                        break
    return dist, rank


@njit(cache=True)
def _dial_sssp(out_indptr, out_head, out_w, n, source, maxw):
    # Requires every weight in [1, maxw]: entries then live in a window of
    # maxw+1 distinct distance values, one circular bucket each.
    dist = np.full(n, INF, np.int64)
    dist[source] = 0
    nbuk = maxw + 1
    bhead = np.full(nbuk, -1, np.int64)
    cap = len(out_head) + 2
    ev = np.empty(cap, np.int64)
    ed = np.empty(cap, np.int64)
    en = np.empty(cap, np.int64)
    ev[0] = source
    ed[0] = 0
    en[0] = -1
    bhead[0] = 0
    cnt = 1
    remaining = 1
    d = np.int64(0)
    while remaining > 0:
        b = d % nbuk
        e = bhead[b]
        if e == -1:
            d += 1
            continue
        bhead[b] = en[e]
        remaining -= 1
        u = ev[e]
        if ed[e] != dist[u]:
            continue
        for k in range(out_indptr[u], out_indptr[u + 1]):
            v = out_head[k]
            nd = d + out_w[k]
            if nd < dist[v]:
                dist[v] = nd
                bb = nd % nbuk
                ev[cnt] = v
                ed[cnt] = nd
                en[cnt] = bhead[bb]
                bhead[bb] = cnt
                cnt += 1
                remaining += 1
    return dist


@njit(cache=True)
def _fill_parents(in_indptr, in_tail, in_w, dist, source, lm):
    n = len(dist)
    for v in range(n):
        lm[v] = 0
        if v == source or dist[v] >= INF:
            continue
        s = in_indptr[v]
        for k in range(s, in_indptr[v + 1]):
            if dist[in_tail[k]] + in_w[k] == dist[v]:
                lm[v] = np.uint8(k - s)
                break


@njit(cache=True)
def _fill_parents_ranked(in_indptr, in_tail, in_w, dist, rank, source, lm):
    n = len(dist)
    for v in range(n):
        lm[v] = 0
        if v == source or dist[v] >= INF:
            continue
        s = in_indptr[v]
        for k in range(s, in_indptr[v + 1]):
            t = in_tail[k]
            if dist[t] + in_w[k] == dist[v] and rank[t] < rank[v]:
                lm[v] = np.uint8(k - s)
                break


@njit(cache=True)
def _sssp_last_move(
    out_indptr, out_head, out_w, in_indptr, in_tail, in_w,
    n, source, use_dial, maxw, ranked, lm,
):
    if use_dial:
        dist = _dial_sssp(out_indptr, out_head, out_w, n, source, maxw)
        _fill_parents(in_indptr, in_tail, in_w, dist, source, lm)
    else:
        dist, rank = _heap_sssp(out_indptr, out_head, out_w, n, source)
        if ranked:
            _fill_parents_ranked(in_indptr, in_tail, in_w, dist, rank, source, lm)
        else:
            _fill_parents(in_indptr, in_tail, in_w, dist, source, lm)
    return dist


@njit(cache=True, parallel=True)
def _apsp_chunk(
    out_indptr, out_head, out_w, in_indptr, in_tail, in_w,
    n, sources, use_dial, maxw, ranked, out,
):
    for i in prange(len(sources)):
        _sssp_last_move(
            out_indptr, out_head, out_w, in_indptr, in_tail, in_w,
            n, sources[i], use_dial, maxw, ranked, out[i],
        )


@njit(cache=True)
def _tree_resolve(in_indptr, in_tail, in_w, last_move, n, source):
    """Distance of every vertex along its stored parent chain; -1 when the
    chain never reaches the source (unreachable or corrupt)."""
    UNKNOWN = np.int64(-2)
    PENDING = np.int64(-3)
    td = np.full(n, UNKNOWN, np.int64)
    if 0 <= source < n:
        td[source] = 0
    stack = np.empty(n, np.int64)
    for v0 in range(n):
        if td[v0] != UNKNOWN:
            continue
        u = v0
        top = 0
        base = np.int64(-1)
        dead = False
        while True:
            state = td[u]
            if state >= 0:
                base = state
                break
            if state == np.int64(-1) or state == PENDING:
                dead = True
                break
            td[u] = PENDING
            stack[top] = u
            top += 1
            s = in_indptr[u]
            deg = in_indptr[u + 1] - s
            if deg == 0 or last_move[u] >= deg:
                dead = True
                break
            u = in_tail[s + last_move[u]]
        if dead:
            for i in range(top):
                td[stack[i]] = -1
        else:
            d = base
            for i in range(top - 1, -1, -1):
                w = stack[i]
                d += in_w[in_indptr[w] + last_move[w]]
                td[w] = d
    return td


@njit(cache=True)
def _tree_hops(in_indptr, in_tail, last_move, n, source, v):
    u = v
    steps = np.int64(0)
    while u != source:
        s = in_indptr[u]
        deg = in_indptr[u + 1] - s
        if deg == 0 or last_move[u] >= deg or steps > n:
            return np.int64(-1)
        u = in_tail[s + last_move[u]]
        steps += 1
    return steps


def _mode(graph: Graph) -> tuple[bool, int, bool]:
    use_dial = (
        not graph.has_zero_weight
        and graph.edge_count > 0
        and graph.max_weight <= DIAL_MAX_WEIGHT
    )
    maxw = max(1, graph.max_weight)
    return use_dial, maxw, graph.has_zero_weight


def _check_source(graph: Graph, source: int) -> int:
    source = int(source)
    if not (0 <= source < graph.vertex_count):
        raise IndexError(
            f"source {source} outside [0,{graph.vertex_count})"
        )
    return source


def dijkstra_spt(graph: Graph, source: int) -> Spt:
    """Shortest-path tree from ``source`` as a last-move table.

    Deterministic: equal-distance predecessors resolve to the smallest
    vertex id (restricted to already-settled vertices where zero-weight
    edges are present, keeping the tree acyclic).
    """
    source = _check_source(graph, source)
    use_dial, maxw, ranked = _mode(graph)
    lm = np.zeros(graph.vertex_count, np.uint8)
    _sssp_last_move(
        graph.out_indptr, graph.out_head, graph.out_weight,
        graph.in_indptr, graph.in_tail, graph.in_weight,
        graph.vertex_count, source, use_dial, maxw, ranked, lm,
    )
    return Spt(source=source, last_move=lm)


def dijkstra_distances(graph: Graph, source: int) -> np.ndarray:
    """Exact distances from ``source``; UNREACHABLE (-1) where no path exists."""
    source = _check_source(graph, source)
    use_dial, maxw, ranked = _mode(graph)
    lm = np.zeros(graph.vertex_count, np.uint8)
    dist = _sssp_last_move(
        graph.out_indptr, graph.out_head, graph.out_weight,
        graph.in_indptr, graph.in_tail, graph.in_weight,
        graph.vertex_count, source, use_dial, maxw, ranked, lm,
    )
    dist = dist.copy()
    dist[dist >= INF] = UNREACHABLE
    return dist


def set_worker_threads(threads: int | None) -> int:
    """Clamp and apply the numba thread count; returns the effective value."""
    limit = numba.config.NUMBA_NUM_THREADS
    if threads is None or threads <= 0:
        threads = limit
    threads = min(int(threads), limit)
    numba.set_num_threads(threads)
    return threads


def iter_spts(graph: Graph, sources, *, threads=None, chunk_size=256):
    """Yield (source, last_move_row) in the order given.

    Rows are views into a per-chunk buffer and are only valid until the next
    chunk is computed; copy them to retain. Sources within a chunk may be
    computed concurrently, but delivery follows the input order.
    """
    set_worker_threads(threads)
    src = np.asarray(list(sources), dtype=np.int64)
    if len(src) == 0:
        raise ValueError("sources must be non-empty")
    if src.min() < 0 or src.max() >= graph.vertex_count:
        raise IndexError("source vertex out of range")
    use_dial, maxw, ranked = _mode(graph)
    n = graph.vertex_count
    for lo in range(0, len(src), chunk_size):
        chunk = src[lo : lo + chunk_size]
        out = np.zeros((len(chunk), n), np.uint8)
        _apsp_chunk(
            graph.out_indptr, graph.out_head, graph.out_weight,
            graph.in_indptr, graph.in_tail, graph.in_weight,
            n, chunk, use_dial, maxw, ranked, out,
        )
        for i, s in enumerate(chunk):
            yield int(s), out[i]


def apsp_sweep(graph: Graph, sources, sink, *, threads=None, chunk_size=256) -> None:
    """Run dijkstra_spt for each source and hand the trees to ``sink`` in order.

    ``sink`` receives one :class:`Spt` per source; a sink failure aborts the
    remaining work. The result stream is byte-identical regardless of the
    worker thread count.
    """
    for s, row in iter_spts(graph, sources, threads=threads, chunk_size=chunk_size):
        sink(Spt(source=s, last_move=row.copy()))


def tree_distances(graph: Graph, spt: Spt) -> np.ndarray:
    """Distances implied by the stored parent chains; -1 where unreachable."""
    return _tree_resolve(
        graph.in_indptr, graph.in_tail, graph.in_weight,
        spt.last_move, graph.vertex_count, spt.source,
    )


def tree_reachable(graph: Graph, spt: Spt) -> np.ndarray:
    """Boolean mask of vertices whose parent chain reaches the source.

    A stored local index always names a real edge, so a chain that reaches
    the source proves reachability; unreachable vertices' chains provably
    cannot (their in-neighbors are all unreachable too) and either dead-end
    or cycle, which the resolver detects.
    """
    return tree_distances(graph, spt) >= 0


def tree_path_len(graph: Graph, spt: Spt, v: int) -> int:
    """Edge count of the tree path from the source to ``v`` (-1 unreachable)."""
    return int(
        _tree_hops(
            graph.in_indptr, graph.in_tail, spt.last_move,
            graph.vertex_count, spt.source, int(v),
        )
    )
