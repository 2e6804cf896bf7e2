"""splz: precomputed all-pairs shortest-path trees, compressed for fast SSSP.

Pipeline: parse a DIMACS road network, normalize it (virtual-vertex splits
keep every in-neighbor list inside the 4-bit local-index alphabet), partition
vertices into spatial regions, compute every vertex's shortest-path tree, and
compress each tree against a fixed per-region dictionary (optionally through
multi-step dictionary chains). A query then decompresses exactly one chain of
records at close to memory-copy speed.
"""

__version__ = "0.1.0"

from .archive import (
    ArchiveHeader,
    ArchiveReader,
    ArchiveSizes,
    RecordView,
    build_archive,
    open_archive,
    write_meta,
)
from .codec import (
    Literal,
    Match,
    MatchDictionary,
    TokenStream,
    compress_spt,
    decode_record_into,
    decode_stream,
    decompress_spt,
    encode_stream,
    lz77_compress,
    lz77_decompress,
)
from .errors import (
    AlphabetError,
    ArchiveFormatError,
    CodeRangeError,
    ConsistencyError,
    CorruptStreamError,
    ParseError,
    PartitionError,
    SplzError,
)
from .graphs import (
    MAX_IN_DEGREE,
    NO_PREDECESSOR,
    Graph,
    RawGraph,
    Spt,
    load_dimacs,
    normalize,
    parse_dimacs,
    to_global,
    to_local,
)
from .partition import (
    ROOT_DICT,
    RegionPlan,
    assign_dict_parents,
    build_plan,
    choose_roots,
    kmeans_partition,
    region_count_for,
)
from .query import BenchReport, QuerySession, bench, query_global, query_passes, query_spt
from .sssp import (
    apsp_sweep,
    dijkstra_distances,
    dijkstra_spt,
    iter_spts,
    tree_distances,
    tree_path_len,
    tree_reachable,
)
from .stats import ratio_sweep, similarity_curve, similarity_samples, spearman
