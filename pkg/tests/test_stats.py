import math

import numpy as np
import pytest

from splz import RawGraph, normalize
from splz.generate import grid_graph
from splz.stats import (
    ratio_sweep,
    similarity_curve,
    similarity_samples,
    spearman,
)


@pytest.fixture(scope="module")
def grid16():
    return normalize(grid_graph(16, 16))


def test_self_pair_similarity():
    g = normalize(RawGraph(1, [], np.zeros((1, 2), np.int64)))
    path_lens, sims = similarity_samples(g, 10, seed=0)
    assert path_lens.tolist() == [0] * 10
    assert sims.tolist() == [1.0] * 10


def test_similarity_decreases_with_distance(grid16):
    path_lens, sims = similarity_samples(grid16, 600, seed=1)
    assert len(path_lens) == 600  # grid is strongly connected
    rho = spearman(path_lens, sims)
    assert rho < -0.3
    near = sims[path_lens <= 2]
    far = sims[path_lens >= 20]
    assert near.mean() > far.mean()


def test_similarity_curve_table(grid16):
    table = similarity_curve(grid16, 400, seed=2)
    assert table.metadata["pairs_used"] == 400
    lens = [row[0] for row in table.rows]
    assert lens == sorted(lens)
    assert sum(row[1] for row in table.rows) == 400
    for _, _, sim in table.rows:
        assert 0.0 <= sim <= 1.0
    csv = table.to_csv()
    assert csv.startswith("# pairs_requested=400")
    assert "path_len,pairs,mean_similarity" in csv


def test_similarity_skips_unreachable():
    raw = RawGraph(
        4, [(0, 1, 1), (1, 0, 1), (2, 3, 1), (3, 2, 1)],
        np.array([(0, 0), (1, 0), (50, 0), (51, 0)], np.int64),
    )
    g = normalize(raw)
    path_lens, sims = similarity_samples(g, 200, seed=3)
    assert 0 < len(path_lens) < 200
    assert table_rows_cover_only_reachable(g, path_lens)


def table_rows_cover_only_reachable(g, path_lens):
    return bool((path_lens >= 0).all())


def test_similarity_validates_pairs(grid16):
    with pytest.raises(ValueError):
        similarity_samples(grid16, 0, seed=0)


# ---------------------------------------------------------------------------
# Ratio sweeps


def test_ratio_accounting_identity(grid16):
    table = ratio_sweep(grid16, [0.5, 1.0], [math.inf, 2], seed=0)
    assert len(table.rows) == 4
    n = grid16.vertex_count
    for row in table.rows:
        parts = (
            row.dictionary_bytes + row.stream_bytes + row.index_bytes
            + row.region_table_bytes + 64
        )
        assert parts == row.archive_bytes
        assert row.ratio == pytest.approx(n * n / row.archive_bytes)


def test_ratio_csv_deterministic(grid16):
    a = ratio_sweep(grid16, [1.0], [math.inf, 1], seed=4).to_csv()
    b = ratio_sweep(grid16, [1.0], [math.inf, 1], seed=4).to_csv()
    assert a == b
    assert "c,len_to_dic,regions" in a
    assert ",inf," in a


def test_dictionary_proportion_strictly_increases(grid16):
    table = ratio_sweep(grid16, [0.25, 1.0, 4.0], [math.inf], seed=0)
    props = [row.dictionary_proportion for row in table.rows]
    assert props[0] < props[1] < props[2]


def test_smaller_len_to_dic_never_grows_streams(grid16):
    table = ratio_sweep(grid16, [1.0], [math.inf, 4, 1], seed=0)
    streams = [row.stream_bytes for row in table.rows]
    assert streams[0] >= streams[1] >= streams[2]


def test_ratio_rejects_empty_lists(grid16):
    with pytest.raises(ValueError):
        ratio_sweep(grid16, [], [1], seed=0)
