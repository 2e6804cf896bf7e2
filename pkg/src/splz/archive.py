"""The `.splz` container: build, open, and random-access record reads.

Layout (all integers little-endian, offsets from the start of the file):

    header        64 bytes, see HEADER below
    region table  root_of u32[k], dict_offset u64[k],
                  dict_parent i32[n], region_of u32[n]
    dictionaries  k raw root trees, n bytes each, uncompressed
    index         u64[n+1] byte offsets into the streams section
    streams       encoded records concatenated in vertex order

Roots occupy index slots with zero length so the index stays dense. The
index, region table, and dictionaries are always loaded up front; stream
bytes are read lazily in file-backed mode, so a file truncated inside the
streams section still opens and only the affected reads fail.
"""

from __future__ import annotations

import io
import math
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import MatchDictionary, encode_token_arrays, _compress
from .errors import ArchiveFormatError, ConsistencyError
from .graphs import Graph
from .partition import ROOT_DICT, RegionPlan
from .sssp import iter_spts

MAGIC = b"SPLZ"
VERSION = 1

# magic, version, reserved, vertex_count, original_vertex_count,
# region_count, len_to_dic (0 = inf), seed, four section offsets
_HEADER = struct.Struct("<4sHHIIIIQQQQQ")
HEADER_SIZE = _HEADER.size  # 64


@dataclass
class ArchiveHeader:
    vertex_count: int
    original_vertex_count: int
    region_count: int
    len_to_dic: float  # math.inf encoded as 0 on disk
    seed: int
    off_region_table: int
    off_dictionaries: int
    off_index: int
    off_streams: int
    version: int = VERSION

    def pack(self) -> bytes:
        d = 0 if math.isinf(self.len_to_dic) else int(self.len_to_dic)
        return _HEADER.pack(
            MAGIC, self.version, 0,
            self.vertex_count, self.original_vertex_count,
            self.region_count, d, self.seed,
            self.off_region_table, self.off_dictionaries,
            self.off_index, self.off_streams,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "ArchiveHeader":
        if len(raw) < HEADER_SIZE:
            raise ArchiveFormatError("file shorter than the archive header")
        (magic, version, _reserved, n, n0, k, d, seed,
         off_rt, off_dic, off_idx, off_str) = _HEADER.unpack(raw[:HEADER_SIZE])
        if magic != MAGIC:
            raise ArchiveFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ArchiveFormatError(f"unsupported version {version}")
        return cls(
            vertex_count=n, original_vertex_count=n0, region_count=k,
            len_to_dic=math.inf if d == 0 else float(d), seed=seed,
            off_region_table=off_rt, off_dictionaries=off_dic,
            off_index=off_idx, off_streams=off_str, version=version,
        )


@dataclass
class ArchiveSizes:
    header: int
    region_table: int
    dictionaries: int
    index: int
    streams: int

    @property
    def total(self) -> int:
        return (
            self.header + self.region_table + self.dictionaries
            + self.index + self.streams
        )

    def dictionary_proportion(self) -> float:
        return self.dictionaries / self.total if self.total else 0.0


@dataclass
class RecordView:
    vertex: int
    region: int
    dict_parent: int
    is_root: bool
    payload: bytes  # encoded tokens, or the raw dictionary for roots


def build_archive(
    graph: Graph,
    plan: RegionPlan,
    sink,
    *,
    seed: int = 0,
    spt_source=None,
    threads: int | None = None,
) -> ArchiveHeader:
    """Compress every vertex's tree into ``sink`` and return the header.

    Trees are produced region by region, roots first and then members in
    chain-depth order, so each record's dictionary (the region dictionary or
    an ancestor's freshly expanded tree) is in memory exactly when needed;
    a tree is retained only while chain children still reference it. Output
    is deterministic given (graph, plan, seed).

    ``spt_source(sources) -> iterable[(vertex, uint8 row)]`` overrides the
    internal sweep, letting callers share a precomputed tree matrix.
    """
    n = graph.vertex_count
    if len(plan.region_of) != n or len(plan.dict_parent) != n:
        raise ConsistencyError("plan does not match the graph's vertex count")
    if spt_source is None:
        def spt_source(sources):
            return iter_spts(graph, sources, threads=threads)

    region_of = plan.region_of
    root_of = plan.root_of
    dict_parent = plan.dict_parent
    k = plan.region_count

    members: list[list[int]] = [[] for _ in range(k)]
    for v in range(n):
        members[region_of[v]].append(v)
    order: list[int] = []
    for r in range(k):
        root = int(root_of[r])
        rest = [v for v in members[r] if v != root]
        rest.sort(key=lambda v: (int(plan.depth[v]), v))
        order.append(root)
        order.extend(rest)

    refcount = np.zeros(n, np.int64)
    for v in range(n):
        p = int(dict_parent[v])
        if p != ROOT_DICT and not plan.is_root(v):
            refcount[p] += 1

    records: list[bytes | None] = [None] * n
    dict_blobs: list[bytes | None] = [None] * k
    loc_scratch = np.empty(max(1, n), np.int64)
    len_scratch = np.empty(max(1, n), np.int64)

    region_dict: MatchDictionary | None = None
    chain_dicts: dict[int, MatchDictionary] = {}
    current_region = -1

    for s, row in spt_source(order):
        r = int(region_of[s])
        if r != current_region:
            current_region = r
            region_dict = None
            chain_dicts.clear()
        if s == int(root_of[r]):
            dict_blobs[r] = row.tobytes()
            region_dict = MatchDictionary(row.copy())
            records[s] = b""
            continue
        dp = int(dict_parent[s])
        if dp == ROOT_DICT:
            mdict = region_dict
        else:
            mdict = chain_dicts.get(dp)
        if mdict is None:
            raise ConsistencyError(
                f"dictionary for vertex {s} not available during build"
            )
        ntok = _compress(
            mdict.data, row, mdict.gram_start, mdict.gram_pos,
            mdict.first_pos, loc_scratch, len_scratch,
        )
        records[s] = encode_token_arrays(loc_scratch, len_scratch, ntok)
        if refcount[s] > 0:
            chain_dicts[s] = MatchDictionary(row.copy())
        if dp != ROOT_DICT:
            refcount[dp] -= 1
            if refcount[dp] == 0:
                chain_dicts.pop(dp, None)

    # Assemble sections
    dict_offsets = np.zeros(k, np.uint64)
    pos = 0
    for r in range(k):
        dict_offsets[r] = pos
        pos += len(dict_blobs[r])
    dicts_section = b"".join(dict_blobs)  # type: ignore[arg-type]

    region_table = b"".join(
        (
            np.asarray(root_of, np.uint32).tobytes(),
            dict_offsets.tobytes(),
            np.asarray(dict_parent, np.int32).tobytes(),
            np.asarray(region_of, np.uint32).tobytes(),
        )
    )

    lengths = np.fromiter((len(rec) for rec in records), np.uint64, count=n)
    index = np.zeros(n + 1, np.uint64)
    np.cumsum(lengths, out=index[1:])
    index_section = index.tobytes()

    off_rt = HEADER_SIZE
    off_dic = off_rt + len(region_table)
    off_idx = off_dic + len(dicts_section)
    off_str = off_idx + len(index_section)

    header = ArchiveHeader(
        vertex_count=n,
        original_vertex_count=graph.real_count,
        region_count=k,
        len_to_dic=plan.len_to_dic,
        seed=seed,
        off_region_table=off_rt,
        off_dictionaries=off_dic,
        off_index=off_idx,
        off_streams=off_str,
    )
    sink.write(header.pack())
    sink.write(region_table)
    sink.write(dicts_section)
    sink.write(index_section)
    for rec in records:
        if rec:
            sink.write(rec)
    return header


class ArchiveReader:
    """Random-access reads of one vertex's compressed record.

    Thread-safe: file-backed reads are positioned (no shared cursor), and
    the in-memory tables are immutable after open.
    """

    def __init__(self, header: ArchiveHeader, meta, streams, fd=None, path=None):
        self.header = header
        (self.root_of, self.dict_offsets, self.dict_parent,
         self.region_of, self.index, self._dicts) = meta
        self._streams = streams  # memoryview in mem mode, else None
        self._fd = fd
        self._path = path
        self._local = threading.local()

    # -- basic properties

    @property
    def vertex_count(self) -> int:
        return self.header.vertex_count

    @property
    def original_vertex_count(self) -> int:
        return self.header.original_vertex_count

    @property
    def region_count(self) -> int:
        return self.header.region_count

    @property
    def len_to_dic(self) -> float:
        return self.header.len_to_dic

    @property
    def mode(self) -> str:
        return "mem" if self._streams is not None else "file"

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # -- data access

    def dictionary(self, r: int) -> np.ndarray:
        """The raw region dictionary (a root's tree) as uint8."""
        return self._dicts[r]

    def match_dictionary(self, r: int) -> MatchDictionary:
        cache = getattr(self._local, "mdicts", None)
        if cache is None:
            cache = self._local.mdicts = {}
        md = cache.get(r)
        if md is None:
            md = cache[r] = MatchDictionary(self._dicts[r])
        return md

    def is_root(self, v: int) -> bool:
        return int(self.root_of[self.region_of[v]]) == int(v)

    def record_payload(self, v: int) -> bytes | memoryview:
        """Exact byte slice [index[v], index[v+1]) of the streams section."""
        start = int(self.index[v])
        end = int(self.index[v + 1])
        if self._streams is not None:
            if end > len(self._streams):
                raise ArchiveFormatError(
                    f"record {v}: stream bytes [{start},{end}) beyond the "
                    f"{len(self._streams)} bytes present (truncated archive?)"
                )
            return self._streams[start:end]
        length = end - start
        data = os.pread(self._fd, length, self.header.off_streams + start)
        if len(data) != length:
            raise ArchiveFormatError(
                f"record {v}: wanted {length} bytes at stream offset {start}, "
                f"got {len(data)} (truncated archive?)"
            )
        return data

    def read_record(self, v: int) -> RecordView:
        v = int(v)
        if not (0 <= v < self.vertex_count):
            raise IndexError(f"vertex {v} outside [0,{self.vertex_count})")
        r = int(self.region_of[v])
        if self.is_root(v):
            return RecordView(
                vertex=v, region=r, dict_parent=ROOT_DICT, is_root=True,
                payload=self._dicts[r].tobytes(),
            )
        return RecordView(
            vertex=v, region=r, dict_parent=int(self.dict_parent[v]),
            is_root=False, payload=bytes(self.record_payload(v)),
        )

    def sizes(self) -> ArchiveSizes:
        h = self.header
        return ArchiveSizes(
            header=HEADER_SIZE,
            region_table=h.off_dictionaries - h.off_region_table,
            dictionaries=h.off_index - h.off_dictionaries,
            index=h.off_streams - h.off_index,
            streams=int(self.index[-1]),
        )


def open_archive(source, mode: str = "mem") -> ArchiveReader:
    """Open an archive from a path, bytes, or binary file object.

    ``mode="mem"`` loads everything; ``mode="file"`` (paths only) keeps an fd
    and reads stream bytes per query, with header, region table, index, and
    all dictionaries resident.
    """
    if mode not in ("mem", "file"):
        raise ValueError(f"mode must be 'mem' or 'file', not {mode!r}")

    if isinstance(source, (str, Path)):
        if mode == "file":
            fd = os.open(str(source), os.O_RDONLY)
            try:
                size = os.fstat(fd).st_size
                header, meta = _load_tables(
                    lambda off, ln: os.pread(fd, ln, off), size
                )
            except Exception:
                os.close(fd)
                raise
            return ArchiveReader(header, meta, None, fd=fd, path=str(source))
        with open(source, "rb") as f:
            buf = f.read()
    elif isinstance(source, (bytes, bytearray, memoryview)):
        buf = bytes(source)
    elif hasattr(source, "read"):
        buf = source.read()
    else:
        raise TypeError(f"cannot open archive from {type(source).__name__}")

    if mode == "file":
        raise ValueError("file-backed mode needs a filesystem path")
    view = memoryview(buf)
    header, meta = _load_tables(lambda off, ln: view[off : off + ln], len(buf))
    streams = view[header.off_streams :]
    return ArchiveReader(header, meta, streams)


def _load_tables(read_at, file_size: int):
    header = ArchiveHeader.unpack(bytes(read_at(0, HEADER_SIZE)))
    offs = (
        header.off_region_table, header.off_dictionaries,
        header.off_index, header.off_streams,
    )
    if not (HEADER_SIZE == offs[0] <= offs[1] <= offs[2] <= offs[3] <= file_size):
        raise ArchiveFormatError(
            f"section offsets {offs} not ascending within file of {file_size} bytes"
        )
    n = header.vertex_count
    k = header.region_count

    rt_len = header.off_dictionaries - header.off_region_table
    want_rt = 4 * k + 8 * k + 4 * n + 4 * n
    if rt_len != want_rt:
        raise ArchiveFormatError(
            f"region table is {rt_len} bytes, expected {want_rt}"
        )
    rt = bytes(read_at(header.off_region_table, rt_len))
    p = 0
    root_of = np.frombuffer(rt, "<u4", k, p); p += 4 * k
    dict_offsets = np.frombuffer(rt, "<u8", k, p); p += 8 * k
    dict_parent = np.frombuffer(rt, "<i4", n, p); p += 4 * n
    region_of = np.frombuffer(rt, "<u4", n, p)

    idx_len = header.off_streams - header.off_index
    if idx_len != 8 * (n + 1):
        raise ArchiveFormatError(
            f"index is {idx_len} bytes, expected {8 * (n + 1)}"
        )
    index = np.frombuffer(bytes(read_at(header.off_index, idx_len)), "<u8")
    if len(index) and (np.diff(index.astype(np.int64)) < 0).any():
        raise ArchiveFormatError("index offsets are not non-decreasing")

    dic_len = header.off_index - header.off_dictionaries
    if k and dic_len < k * n:
        raise ArchiveFormatError(
            f"dictionary section is {dic_len} bytes for {k} regions of {n}"
        )
    dicts = []
    for r in range(k):
        off = header.off_dictionaries + int(dict_offsets[r])
        if off + n > header.off_index:
            raise ArchiveFormatError(f"dictionary {r} extends past its section")
        dicts.append(
            np.frombuffer(bytes(read_at(off, n)), np.uint8)
        )

    if (root_of >= max(n, 1)).any():
        raise ArchiveFormatError("region root outside vertex range")

    return header, (root_of, dict_offsets, dict_parent, region_of, index, dicts)


def write_meta(header: ArchiveHeader, sizes: ArchiveSizes, path) -> None:
    """Human-readable sidecar duplicating the header fields."""
    d = "inf" if math.isinf(header.len_to_dic) else str(int(header.len_to_dic))
    lines = [
        f"magic={MAGIC.decode()}",
        f"version={header.version}",
        f"vertex_count={header.vertex_count}",
        f"original_vertex_count={header.original_vertex_count}",
        f"region_count={header.region_count}",
        f"len_to_dic={d}",
        f"seed={header.seed}",
        f"header_bytes={sizes.header}",
        f"region_table_bytes={sizes.region_table}",
        f"dictionary_bytes={sizes.dictionaries}",
        f"index_bytes={sizes.index}",
        f"stream_bytes={sizes.streams}",
        f"total_bytes={sizes.total}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
