import io
import math

import numpy as np
import pytest

from splz import (
    CorruptStreamError,
    build_archive,
    build_plan,
    normalize,
    open_archive,
)
from splz.generate import grid_graph, star_graph
from splz.query import bench, query_global, query_passes, query_spt
from splz.sssp import dijkstra_spt, tree_path_len
from splz.graphs import to_global

from conftest import GOLDEN_LOCAL, GOLDEN_GLOBAL


def archive_for(graph, c=0.2, len_to_dic=math.inf, seed=0):
    plan = build_plan(
        graph, c, seed, len_to_dic,
        root_spts_for=lambda roots: [dijkstra_spt(graph, r) for r in roots],
    )
    sink = io.BytesIO()
    build_archive(graph, plan, sink, seed=seed)
    return open_archive(sink.getvalue())


@pytest.fixture(scope="module")
def golden_reader(golden_graph):
    return archive_for(golden_graph, c=0.1)


def test_golden_queries(golden_reader, golden_graph):
    for s, want in GOLDEN_LOCAL.items():
        assert query_spt(golden_reader, s).last_move.tolist() == want


def test_root_query_returns_dictionary(golden_reader):
    spt = query_spt(golden_reader, 2)
    assert spt.last_move.tobytes() == golden_reader.dictionary(0).tobytes()
    assert query_passes(golden_reader, 2) == 0
    assert query_passes(golden_reader, 1) == 1


def test_query_out_of_range(golden_reader):
    with pytest.raises(IndexError):
        query_spt(golden_reader, 6)


@pytest.mark.parametrize("len_to_dic", [1, 2, math.inf])
def test_grid_queries_match_oracle_exhaustively(len_to_dic):
    g = normalize(grid_graph(12, 12))
    reader = archive_for(g, c=0.3, len_to_dic=len_to_dic)
    for v in range(g.vertex_count):
        assert query_spt(reader, v) == dijkstra_spt(g, v), (len_to_dic, v)


def test_chain_pass_counts_follow_ceiling():
    g = normalize(grid_graph(9, 9))
    # single region: chains never leave it, so passes = ceil(path_len / d)
    for d in (1, 2, 3):
        reader = archive_for(g, c=0.05, len_to_dic=d)
        root = int(reader.root_of[0])
        spt = dijkstra_spt(g, root)
        for v in range(g.vertex_count):
            if v == root:
                assert query_passes(reader, v) == 0
                continue
            pl = tree_path_len(g, spt, v)
            assert query_passes(reader, v) == math.ceil(pl / d), (d, v, pl)


def test_query_global_matches_direct_conversion(golden_reader, golden_graph):
    for s in range(6):
        got = query_global(golden_reader, golden_graph, s)
        assert got.tolist() == GOLDEN_GLOBAL[s]


def test_query_global_on_split_graph(split_star):
    reader = archive_for(split_star, c=0.1)
    for v in [0, 16, 20, split_star.vertex_count - 1]:
        want = to_global(dijkstra_spt(split_star, v), split_star)
        got = query_global(reader, split_star, v)
        assert got.tolist() == want.tolist()
        assert len(got) == split_star.real_count


def test_query_global_mask(split_star):
    # spokes are mutually unreachable in a star without center->spoke edges
    g = normalize(star_graph(20, center_out=False))
    reader = archive_for(g, c=0.1)
    out = query_global(reader, g, 0, mark_unreachable=True)
    assert out[1] == -1  # other spokes unreachable from spoke 0
    assert out[20] == 0  # the center is reached directly


def test_query_global_graph_mismatch(golden_reader, grid10):
    with pytest.raises(ValueError):
        query_global(golden_reader, grid10, 0)


def test_virtual_sources_work(split_star):
    reader = archive_for(split_star, c=0.1)
    for v in range(split_star.real_count, split_star.vertex_count):
        assert query_spt(reader, v) == dijkstra_spt(split_star, v)


def test_corrupted_record_raises(golden_graph):
    plan = build_plan(golden_graph, 0.1, 0, math.inf)
    sink = io.BytesIO()
    header = build_archive(golden_graph, plan, sink)
    blob = bytearray(sink.getvalue())
    blob[header.off_streams] = 0x80  # now a truncated 2-byte length code
    reader = open_archive(bytes(blob))
    first_nonroot = 0
    with pytest.raises(CorruptStreamError):
        query_spt(reader, first_nonroot)


def test_file_backed_queries(tmp_path, grid10):
    plan = build_plan(grid10, 0.3, 0, math.inf)
    path = tmp_path / "grid.splz"
    with open(path, "wb") as sink:
        build_archive(grid10, plan, sink)
    with open_archive(path, "file") as reader:
        for v in range(0, grid10.vertex_count, 7):
            assert query_spt(reader, v) == dijkstra_spt(grid10, v)


# ---------------------------------------------------------------------------
# Benchmark harness


def test_bench_report_structure(golden_reader, golden_graph):
    report = bench(
        golden_reader, [0, 1, 2, 3, 4, 5] * 10, graph=golden_graph, warmup=5
    )
    methods = [r.method for r in report.rows]
    assert methods == ["splz", "bulk_copy", "loop_copy", "dijkstra"]
    for row in report.rows:
        assert row.samples > 0
        assert row.mean_us > 0
        assert row.p99_us >= row.median_us >= 0
    assert report.row("bulk_copy").ratio_vs_bulk_copy == pytest.approx(1.0)
    csv = report.to_csv()
    assert csv.count("\n") == len(report.rows) + 4
    assert "method,samples,mean_us" in csv


def test_bench_without_graph(golden_reader):
    report = bench(golden_reader, [0, 1], warmup=1)
    assert [r.method for r in report.rows] == ["splz", "bulk_copy", "loop_copy"]


def test_bench_rejects_empty(golden_reader):
    with pytest.raises(ValueError):
        bench(golden_reader, [])
