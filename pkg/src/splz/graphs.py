"""Road-network graph model: DIMACS parsing, normalization, and last-move tables.

A parsed network becomes a :class:`RawGraph` (plain edge list). :func:`normalize`
turns it into the immutable :class:`Graph` used everywhere else: CSR adjacency in
both directions, in-neighbors sorted by tail id, and virtual-vertex splitting so
that every in-neighbor list fits the 4-bit local-index alphabet.

A shortest-path tree is stored as an :class:`Spt`: one local predecessor index
per vertex (the "last move" into that vertex), each in [0, 15].
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, ParseError

# Local indices are nibbles, so an in-neighbor list may hold at most 16 entries.
MAX_IN_DEGREE = 16

NO_PREDECESSOR = -1


@dataclass
class RawGraph:
    """Directed weighted edge list with optional planar coordinates."""

    vertex_count: int
    edges: list[tuple[int, int, int]]
    coords: np.ndarray | None = None  # (vertex_count, 2) int64, or None

    def validate(self) -> None:
        n = self.vertex_count
        for t, h, w in self.edges:
            if not (0 <= t < n and 0 <= h < n):
                raise ConsistencyError(f"edge ({t},{h}) outside [0,{n})")
            if w < 0:
                raise ConsistencyError(f"edge ({t},{h}) has negative weight {w}")
        if self.coords is not None and len(self.coords) != n:
            raise ConsistencyError(
                f"coords has {len(self.coords)} rows for {n} vertices"
            )


@dataclass(frozen=True)
class Graph:
    """Normalized immutable graph with CSR adjacency in both directions.

    ``in_tail[in_indptr[v]:in_indptr[v+1]]`` lists the in-neighbors of ``v``
    sorted ascending; the position of a tail within that slice is its local
    index, and every slice has at most ``MAX_IN_DEGREE`` entries. Vertices with
    id >= ``real_count`` are virtual: zero-distance clones introduced by
    :func:`normalize`, with ``origin`` naming the real vertex they split off.
    """

    vertex_count: int
    real_count: int
    out_indptr: np.ndarray  # int64 (n+1,)
    out_head: np.ndarray  # int32 (m,)
    out_weight: np.ndarray  # int64 (m,)
    in_indptr: np.ndarray  # int64 (n+1,)
    in_tail: np.ndarray  # int32 (m,)
    in_weight: np.ndarray  # int64 (m,)
    origin: np.ndarray  # int32 (n,)
    coords: np.ndarray | None = None  # (real_count, 2) int64
    max_weight: int = field(default=0)
    has_zero_weight: bool = field(default=False)

    @property
    def edge_count(self) -> int:
        return int(len(self.out_head))

    def out_adj(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.out_indptr[v], self.out_indptr[v + 1]
        return self.out_head[s:e], self.out_weight[s:e]

    def in_adj(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.in_indptr[v], self.in_indptr[v + 1]
        return self.in_tail[s:e], self.in_weight[s:e]

    def in_degree(self, v: int) -> int:
        return int(self.in_indptr[v + 1] - self.in_indptr[v])

    def local_index(self, tail: int, head: int) -> int:
        """Position of ``tail`` within head's sorted in-neighbor list."""
        tails, _ = self.in_adj(head)
        i = int(np.searchsorted(tails, tail))
        if i >= len(tails) or tails[i] != tail:
            raise ConsistencyError(f"{tail} is not an in-neighbor of {head}")
        return i

    def is_virtual(self, v: int) -> bool:
        return v >= self.real_count


@dataclass
class Spt:
    """Last-move table for one source: local predecessor index per vertex.

    ``last_move[source] == 0`` by convention, and unreachable vertices also
    store 0; the array alone does not distinguish them (see
    :func:`to_global`).
    """

    source: int
    last_move: np.ndarray  # uint8 (vertex_count,)

    def tobytes(self) -> bytes:
        return self.last_move.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spt):
            return NotImplemented
        return self.source == other.source and np.array_equal(
            self.last_move, other.last_move
        )


# ---------------------------------------------------------------------------
# DIMACS parsing


def _to_lines(text) -> list[str]:
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    if hasattr(text, "read"):
        text = text.read()
        if isinstance(text, bytes):
            text = text.decode("ascii", errors="replace")
    return text.splitlines()


def parse_dimacs(gr_text, co_text=None) -> RawGraph:
    """Parse a DIMACS `.gr` file (and optionally a `.co` file) into a RawGraph.

    Ids in the files are 1-based; the result is 0-based. Duplicate arcs keep
    the minimum weight. Errors name the offending 1-based line number.
    """
    n = None
    m_declared = None
    best: dict[tuple[int, int], int] = {}
    for lineno, line in enumerate(_to_lines(gr_text), start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise ParseError("duplicate problem line", lineno)
            if len(parts) != 4 or parts[1] != "sp":
                raise ParseError(f"malformed problem line {line!r}", lineno)
            try:
                n, m_declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed problem line {line!r}", lineno)
            if n < 0 or m_declared < 0:
                raise ParseError("negative counts in problem line", lineno)
        elif parts[0] == "a":
            if n is None:
                raise ParseError("arc before problem line", lineno)
            if len(parts) != 4:
                raise ParseError(f"malformed arc line {line!r}", lineno)
            try:
                u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed arc line {line!r}", lineno)
            if not (1 <= u <= n and 1 <= v <= n):
                raise ParseError(f"arc endpoint outside [1,{n}]", lineno)
            if w < 0:
                raise ParseError(f"negative arc weight {w}", lineno)
            key = (u - 1, v - 1)
            prev = best.get(key)
            if prev is None or w < prev:
                best[key] = w
        else:
            raise ParseError(f"unrecognized line {line!r}", lineno)
    if n is None:
        raise ParseError("missing problem line `p sp n m`", None)

    coords = None
    if co_text is not None:
        coords = _parse_coords(co_text, n)

    edges = [(t, h, w) for (t, h), w in best.items()]
    edges.sort()
    return RawGraph(vertex_count=n, edges=edges, coords=coords)


def _parse_coords(co_text, n: int) -> np.ndarray:
    coords = np.zeros((n, 2), dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    last_line = 0
    for lineno, line in enumerate(_to_lines(co_text), start=1):
        last_line = lineno
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            # `p aux sp co n` -- validate the count when present
            try:
                declared = int(parts[-1])
            except ValueError:
                raise ParseError(f"malformed coordinate header {line!r}", lineno)
            if declared != n:
                raise ParseError(
                    f"coordinate file declares {declared} vertices, graph has {n}",
                    lineno,
                )
        elif parts[0] == "v":
            if len(parts) != 4:
                raise ParseError(f"malformed coordinate line {line!r}", lineno)
            try:
                vid, x, y = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed coordinate line {line!r}", lineno)
            if not (1 <= vid <= n):
                raise ParseError(f"coordinate vertex {vid} outside [1,{n}]", lineno)
            coords[vid - 1] = (x, y)
            seen[vid - 1] = True
        else:
            raise ParseError(f"unrecognized line {line!r}", lineno)
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0]) + 1
        raise ParseError(
            f"missing coordinate line for vertex {missing}", last_line
        )
    return coords


def _open_maybe_gz(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="ascii", errors="replace")
    return open(path, "rt", encoding="ascii", errors="replace")


def load_dimacs(gr_path, co_path=None) -> RawGraph:
    """Read `.gr`/`.co` files (plain or gzipped) from disk."""
    with _open_maybe_gz(gr_path) as f:
        gr_text = f.read()
    co_text = None
    if co_path is not None:
        with _open_maybe_gz(co_path) as f:
            co_text = f.read()
    return parse_dimacs(gr_text, co_text)


# ---------------------------------------------------------------------------
# Normalization


def normalize(raw: RawGraph) -> Graph:
    """Build the normalized Graph: dedup arcs, drop self-loops, split vertices.

    Any vertex with more than MAX_IN_DEGREE in-neighbors is split into a chain
    of virtual vertices joined to their predecessor by zero-weight edges in
    both directions, each chain element keeping at most MAX_IN_DEGREE in-edges
    (links included). Shortest-path distances between real vertices are
    unchanged: virtual vertices sit at distance zero from their origin.
    """
    raw.validate()
    n_real = raw.vertex_count

    dedup: dict[tuple[int, int], int] = {}
    for t, h, w in raw.edges:
        if t == h:
            continue  # self-loops never lie on a shortest path
        key = (t, h)
        prev = dedup.get(key)
        if prev is None or w < prev:
            dedup[key] = w

    in_edges: list[list[tuple[int, int]]] = [[] for _ in range(n_real)]
    for (t, h), w in dedup.items():
        in_edges[h].append((t, w))
    for lst in in_edges:
        lst.sort()

    edges: list[tuple[int, int, int]] = []  # (tail, head, weight), final ids
    origin: list[int] = list(range(n_real))
    next_id = n_real

    for v in range(n_real):
        lst = in_edges[v]
        if len(lst) <= MAX_IN_DEGREE:
            edges.extend((t, v, w) for t, w in lst)
            continue
        # First MAX_IN_DEGREE-1 stay on v; the rest spill into a chain of
        # virtual clones. Each chain element also carries the zero-weight
        # links, so the in-degree cap holds everywhere:
        #   real v:        15 kept + 1 link from the first virtual
        #   mid virtual:   14 moved + link from next + link from predecessor
        #   last virtual:  <=15 moved + link from predecessor
        keep = MAX_IN_DEGREE - 1
        edges.extend((t, v, w) for t, w in lst[:keep])
        rest = lst[keep:]
        chunks: list[list[tuple[int, int]]] = []
        while len(rest) > MAX_IN_DEGREE - 1:
            chunks.append(rest[: MAX_IN_DEGREE - 2])
            rest = rest[MAX_IN_DEGREE - 2 :]
        chunks.append(rest)
        prev = v
        for chunk in chunks:
            vid = next_id
            next_id += 1
            origin.append(v)
            edges.extend((t, vid, w) for t, w in chunk)
            edges.append((vid, prev, 0))
            edges.append((prev, vid, 0))
            prev = vid

    n = next_id
    return _build_graph(n, n_real, edges, origin, raw.coords)


def _build_graph(n, n_real, edges, origin, coords) -> Graph:
    m = len(edges)
    tails = np.fromiter((e[0] for e in edges), dtype=np.int64, count=m)
    heads = np.fromiter((e[1] for e in edges), dtype=np.int64, count=m)
    weights = np.fromiter((e[2] for e in edges), dtype=np.int64, count=m)

    def csr(key_a, key_b, payload):
        order = np.lexsort((key_b, key_a))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, key_a[order] + 1, 1)
        indptr = np.cumsum(indptr)
        return indptr, key_b[order].astype(np.int32), payload[order]

    out_indptr, out_head, out_w = csr(tails, heads, weights)
    in_indptr, in_tail, in_w = csr(heads, tails, weights)

    too_big = np.flatnonzero(np.diff(in_indptr) > MAX_IN_DEGREE)
    if len(too_big):
        raise ConsistencyError(
            f"normalization left vertex {int(too_big[0])} with in-degree "
            f"{int(in_indptr[too_big[0] + 1] - in_indptr[too_big[0]])}"
        )

    return Graph(
        vertex_count=n,
        real_count=n_real,
        out_indptr=out_indptr,
        out_head=out_head,
        out_weight=out_w,
        in_indptr=in_indptr,
        in_tail=in_tail,
        in_weight=in_w,
        origin=np.asarray(origin, dtype=np.int32),
        coords=None if coords is None else np.asarray(coords, dtype=np.int64),
        max_weight=int(weights.max()) if m else 0,
        has_zero_weight=bool((weights == 0).any()) if m else False,
    )


# ---------------------------------------------------------------------------
# Local <-> global predecessor conversion


def to_local(spt_global, graph: Graph, source: int) -> Spt:
    """Convert a global predecessor array to local in-neighbor indices.

    ``spt_global[v]`` must be an in-neighbor of ``v`` (or NO_PREDECESSOR for
    the source and unreachable vertices, which map to local index 0).
    """
    n = graph.vertex_count
    if len(spt_global) != n:
        raise ConsistencyError(
            f"predecessor array has {len(spt_global)} entries for {n} vertices"
        )
    last_move = np.zeros(n, dtype=np.uint8)
    for v in range(n):
        if v == source:
            continue
        p = int(spt_global[v])
        if p == NO_PREDECESSOR:
            continue
        last_move[v] = graph.local_index(p, v)
    return Spt(source=source, last_move=last_move)


def parent_vertex(spt: Spt, graph: Graph, v: int) -> int:
    """Global id of v's stored predecessor, or NO_PREDECESSOR for the source
    and for vertices with no in-edges."""
    if v == spt.source:
        return NO_PREDECESSOR
    tails, _ = graph.in_adj(v)
    if len(tails) == 0:
        return NO_PREDECESSOR
    local = int(spt.last_move[v])
    if local >= len(tails):
        raise ConsistencyError(f"local index {local} out of range at vertex {v}")
    return int(tails[local])


def to_global(spt: Spt, graph: Graph, reachable=None) -> np.ndarray:
    """Expand local indices to original-graph predecessor ids.

    Virtual vertices are collapsed: a parent chain passing through clones
    reports the real predecessor, and the output covers only the original
    ``real_count`` vertices. Without a ``reachable`` mask, unreachable
    vertices report whatever in-neighbor local index 0 names; pass the mask
    (see :func:`splz.sssp.tree_reachable`) to report NO_PREDECESSOR instead.
    """
    n_real = graph.real_count
    out = np.full(n_real, NO_PREDECESSOR, dtype=np.int64)
    for v in range(n_real):
        if reachable is not None and not reachable[v]:
            continue
        p = parent_vertex(spt, graph, v)
        hops = 0
        while p != NO_PREDECESSOR and graph.is_virtual(p):
            p = parent_vertex(spt, graph, p)
            hops += 1
            if hops > graph.vertex_count:
                raise ConsistencyError(
                    f"predecessor chain through virtual vertices cycles at {v}"
                )
        out[v] = p
    return out
