import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import splz
from splz import (
    MAX_IN_DEGREE,
    NO_PREDECESSOR,
    ConsistencyError,
    ParseError,
    RawGraph,
    normalize,
    parse_dimacs,
    to_global,
    to_local,
)
from splz.generate import star_graph
from splz.sssp import dijkstra_distances, dijkstra_spt, tree_reachable

from conftest import GOLDEN_GLOBAL, GOLDEN_LOCAL, bellman_ford, golden_raw


# ---------------------------------------------------------------------------
# DIMACS parsing


def test_parse_minimal():
    raw = parse_dimacs("p sp 2 1\na 1 2 5\n")
    assert raw.vertex_count == 2
    assert raw.edges == [(0, 1, 5)]
    assert raw.coords is None


def test_parse_with_coords_and_comments():
    gr = "c comment\np sp 2 1\nc another\na 1 2 5\n"
    co = "c comment\np aux sp co 2\nv 1 10 20\nv 2 30 40\n"
    raw = parse_dimacs(gr, co)
    assert raw.coords.tolist() == [[10, 20], [30, 40]]


def test_parse_out_of_range_arc_names_line():
    with pytest.raises(ParseError) as e:
        parse_dimacs("p sp 2 1\na 1 3 5\n")
    assert "line 2" in str(e.value)


def test_parse_arc_before_header():
    with pytest.raises(ParseError):
        parse_dimacs("a 1 2 5\np sp 2 1\n")


def test_parse_malformed_header():
    with pytest.raises(ParseError):
        parse_dimacs("p sp two 1\na 1 2 5\n")
    with pytest.raises(ParseError):
        parse_dimacs("p xx 2 1\n")


def test_parse_missing_problem_line():
    with pytest.raises(ParseError):
        parse_dimacs("c nothing here\n")


def test_parse_missing_coordinate_names_vertex():
    with pytest.raises(ParseError) as e:
        parse_dimacs("p sp 2 1\na 1 2 5\n", "p aux sp co 2\nv 1 0 0\n")
    assert "vertex 2" in str(e.value)


def test_parse_coordinate_count_mismatch():
    with pytest.raises(ParseError):
        parse_dimacs("p sp 2 1\na 1 2 5\n", "p aux sp co 3\nv 1 0 0\nv 2 0 0\n")


def test_parse_negative_weight_rejected():
    with pytest.raises(ParseError):
        parse_dimacs("p sp 2 1\na 1 2 -5\n")


def test_parse_duplicate_arcs_keep_minimum():
    raw = parse_dimacs("p sp 2 3\na 1 2 7\na 1 2 3\na 1 2 9\n")
    assert raw.edges == [(0, 1, 3)]


def test_parse_accepts_bytes():
    raw = parse_dimacs(b"p sp 1 0\n")
    assert raw.vertex_count == 1


# ---------------------------------------------------------------------------
# Normalization


def test_normalize_no_split_is_identity_shaped(golden_graph):
    g = golden_graph
    assert g.vertex_count == 6
    assert g.real_count == 6
    assert list(g.origin) == list(range(6))
    assert g.in_adj(2)[0].tolist() == [0, 1, 3, 4, 5]
    assert g.in_adj(5)[0].tolist() == [3, 4]


def test_normalize_drops_self_loops():
    raw = RawGraph(vertex_count=2, edges=[(0, 0, 1), (0, 1, 2)])
    g = normalize(raw)
    assert g.edge_count == 1


def test_normalize_star_split_shapes(split_star):
    g = split_star
    center = 20
    assert g.real_count == 21
    assert g.vertex_count == 22  # one virtual clone
    virtual = 21
    assert g.origin[virtual] == center
    # center keeps 15 spokes plus the zero-weight link from the clone
    tails, weights = g.in_adj(center)
    assert len(tails) == MAX_IN_DEGREE
    assert tails.tolist() == list(range(15)) + [virtual]
    assert weights[-1] == 0
    # the clone holds the remaining 5 spokes plus the reverse link
    vtails, vweights = g.in_adj(virtual)
    assert vtails.tolist() == [15, 16, 17, 18, 19, center]
    assert vweights[-1] == 0


def test_normalize_star_chain_for_large_degree():
    g = normalize(star_graph(100))
    # every vertex obeys the cap, clones map back to the center
    degrees = np.diff(g.in_indptr)
    assert degrees.max() <= MAX_IN_DEGREE
    assert (g.origin[g.real_count :] == 100).all()
    assert g.vertex_count > g.real_count + 1  # needs a chain, not one clone


@pytest.mark.parametrize("spokes", [20, 40, 100])
def test_normalize_preserves_real_distances(spokes):
    raw = star_graph(spokes)
    g = normalize(raw)
    degrees = np.diff(g.in_indptr)
    assert degrees.max() <= MAX_IN_DEGREE
    for source in [0, spokes // 2, spokes]:
        want = bellman_ford(raw.vertex_count, raw.edges, source)
        got = dijkstra_distances(g, source)
        for v in range(raw.vertex_count):
            expect = -1 if math.isinf(want[v]) else want[v]
            assert got[v] == expect, (source, v)
        # virtual clones sit at distance zero from their origin
        for v in range(g.real_count, g.vertex_count):
            assert got[v] == got[g.origin[v]]


def test_normalize_idempotent(split_star):
    g = split_star
    edges = []
    for t in range(g.vertex_count):
        heads, weights = g.out_adj(t)
        edges.extend((t, int(h), int(w)) for h, w in zip(heads, weights))
    again = normalize(RawGraph(vertex_count=g.vertex_count, edges=edges))
    assert again.vertex_count == g.vertex_count
    assert again.edge_count == g.edge_count


def test_in_adj_strictly_sorted_and_local_index_bijective(split_star):
    g = split_star
    for v in range(g.vertex_count):
        tails, _ = g.in_adj(v)
        assert (np.diff(tails) > 0).all() if len(tails) > 1 else True
        for i, t in enumerate(tails):
            assert g.local_index(int(t), v) == i
    with pytest.raises(ConsistencyError):
        g.local_index(5, 4)  # 5 is not an in-neighbor of 4 in the star


# ---------------------------------------------------------------------------
# Local <-> global conversion


def test_to_local_golden_rows(golden_graph):
    for s, row in GOLDEN_GLOBAL.items():
        spt = to_local(np.array(row), golden_graph, s)
        assert spt.last_move.tolist() == GOLDEN_LOCAL[s]


def test_to_global_golden_rows(golden_graph):
    for s in range(6):
        spt = dijkstra_spt(golden_graph, s)
        assert to_global(spt, golden_graph).tolist() == GOLDEN_GLOBAL[s]


def test_to_local_single_vertex():
    g = normalize(RawGraph(vertex_count=1, edges=[]))
    spt = to_local(np.array([NO_PREDECESSOR]), g, 0)
    assert spt.last_move.tolist() == [0]


def test_to_local_rejects_non_neighbor(golden_graph):
    bad = np.array([2, -1, 1, 2, 2, 1])  # 1 is not an in-neighbor of 5
    with pytest.raises(ConsistencyError):
        to_local(bad, golden_graph, 1)


def test_round_trip_random_graph():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 11))
        edges = [(int(rng.integers(0, v)), v, int(rng.integers(1, 9)))
                 for v in range(1, n)]  # random in-tree rooted at 0
        extra = rng.integers(0, n, size=(n, 2))
        for t, h in extra:
            if t != h:
                edges.append((int(t), int(h), int(rng.integers(1, 9))))
        g = normalize(RawGraph(vertex_count=n, edges=edges))
        # any valid in-neighbor choice must round-trip exactly
        choice = np.full(n, NO_PREDECESSOR, np.int64)
        for v in range(n):
            tails, _ = g.in_adj(v)
            if v != 0 and len(tails):
                choice[v] = int(tails[rng.integers(len(tails))])
        spt = to_local(choice, g, 0)
        back = to_global(spt, g)
        for v in range(n):
            if v == 0:
                assert back[v] == NO_PREDECESSOR
            elif choice[v] != NO_PREDECESSOR:
                assert back[v] == choice[v]


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_round_trip_property(data):
    n = data.draw(st.integers(2, 9))
    edges = []
    for v in range(1, n):
        t = data.draw(st.integers(0, v - 1))
        w = data.draw(st.integers(1, 5))
        edges.append((t, v, w))
    g = normalize(RawGraph(vertex_count=n, edges=edges))
    choice = np.full(n, NO_PREDECESSOR, np.int64)
    for v in range(1, n):
        tails, _ = g.in_adj(v)
        choice[v] = int(tails[data.draw(st.integers(0, len(tails) - 1))])
    spt = to_local(choice, g, 0)
    back = to_global(spt, g)
    assert back[0] == NO_PREDECESSOR
    assert back[1:].tolist() == choice[1:].tolist()


def test_to_global_collapses_virtual_chain(split_star):
    g = split_star
    center, virtual = 20, 21
    spt = dijkstra_spt(g, 16)  # spoke whose in-edge moved to the clone
    # stored parent of the center is the clone; the real parent must be 16
    tails, _ = g.in_adj(center)
    assert int(tails[spt.last_move[center]]) == virtual
    out = to_global(spt, g)
    assert out[center] == 16
    assert len(out) == g.real_count


def test_to_global_mask_marks_unreachable():
    # two components: 0 -> 1 and isolated pair 2 -> 3
    raw = RawGraph(vertex_count=4, edges=[(0, 1, 1), (2, 3, 1)])
    g = normalize(raw)
    spt = dijkstra_spt(g, 0)
    mask = tree_reachable(g, spt)
    assert mask.tolist() == [True, True, False, False]
    out = to_global(spt, g, reachable=mask)
    assert out[1] == 0
    assert out[2] == NO_PREDECESSOR and out[3] == NO_PREDECESSOR
    # without the mask, unreachable entries report local index 0's tail
    blind = to_global(spt, g)
    assert blind[3] == 2
