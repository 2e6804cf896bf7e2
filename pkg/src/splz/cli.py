"""Command-line pipeline: preprocess, query, verify, bench, stats.

Exit codes: 0 success, 1 usage, 2 input error, 3 verification failure,
4 internal error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .archive import build_archive, open_archive, write_meta
from .errors import ParseError, SplzError
from .graphs import load_dimacs, normalize
from .partition import assign_dict_parents, choose_roots, kmeans_partition
from .query import bench as run_bench
from .query import query_global, query_spt
from .sssp import dijkstra_spt, set_worker_threads
from .stats import ratio_sweep, similarity_curve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_VERIFY = 3
EXIT_INTERNAL = 4


class _UsageError(Exception):
    pass


class _VerifyFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_len_to_dic(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        d = int(text)
    except ValueError:
        raise _UsageError(f"--len-to-dic must be a positive integer or 'inf', got {text!r}")
    if d < 1:
        raise _UsageError("--len-to-dic must be >= 1")
    return float(d)


def _positive_float(text: str) -> float:
    try:
        c = float(text)
    except ValueError:
        raise _UsageError(f"expected a number, got {text!r}")
    if c <= 0:
        raise _UsageError(f"value must be positive, got {text}")
    return c


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("SPLZ_THREADS")
    return int(env) if env else None


def _load_graph(gr, co=None):
    raw = load_dimacs(gr, co)
    return normalize(raw)


def build_parser() -> _Parser:
    p = _Parser(prog="splz", description=__doc__)
    p.add_argument("--version", action="version", version=f"splz {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    pp = sub.add_parser("preprocess", help="build a .splz archive from DIMACS files")
    pp.add_argument("--gr", required=True, help="DIMACS .gr graph file")
    pp.add_argument("--co", required=True, help="DIMACS .co coordinate file")
    pp.add_argument("--out", required=True, help="output .splz path")
    pp.add_argument("--c", type=_positive_float, default=1.0,
                    help="region count scale: about c*sqrt(|V|) regions")
    pp.add_argument("--len-to-dic", type=_parse_len_to_dic, default=math.inf,
                    help="dictionary-chain step length, or 'inf' for one step")
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--threads", type=int, default=None)

    pq = sub.add_parser("query", help="decompress one source's tree")
    pq.add_argument("--archive", required=True)
    pq.add_argument("--source", type=int, required=True)
    pq.add_argument("--global", dest="global_ids", action="store_true",
                    help="convert local indices to original-graph ids (needs --gr)")
    pq.add_argument("--gr", help="graph file, required with --global")
    pq.add_argument("--mark-unreachable", action="store_true",
                    help="with --global, report -1 for unreachable vertices")
    pq.add_argument("--store", choices=("mem", "file"), default="mem")
    pq.add_argument("--raw", action="store_true", help="binary output")

    pv = sub.add_parser("verify", help="recompute sampled trees and compare")
    pv.add_argument("--archive", required=True)
    pv.add_argument("--gr", required=True)
    pv.add_argument("--co", default=None)
    pv.add_argument("--sample", default="100",
                    help="number of sampled sources, or 'all'")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--store", choices=("mem", "file"), default="mem")

    pb = sub.add_parser("bench", help="query latency vs copy lower bounds")
    pb.add_argument("--archive", required=True)
    pb.add_argument("--queries", type=int, default=1000)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--store", choices=("mem", "file"), default="mem")
    pb.add_argument("--with-dijkstra", action="store_true",
                    help="also time heap Dijkstra (needs --gr)")
    pb.add_argument("--gr", default=None)
    pb.add_argument("--out", default=None, help="CSV path (default stdout)")

    ps = sub.add_parser("stats", help="analysis sweeps")
    ssub = ps.add_subparsers(dest="stats_cmd", required=True)

    psim = ssub.add_parser("similarity", help="tree similarity vs path length")
    psim.add_argument("--gr", required=True)
    psim.add_argument("--co", default=None)
    psim.add_argument("--pairs", type=int, default=2000)
    psim.add_argument("--seed", type=int, default=0)
    psim.add_argument("--out", default=None)

    prat = ssub.add_parser("ratio", help="archive size vs c and len-to-dic")
    prat.add_argument("--gr", required=True)
    prat.add_argument("--co", required=True)
    prat.add_argument("--c", default="1.0",
                      help="comma-separated region scales, e.g. 0.5,1,2")
    prat.add_argument("--len-to-dic", default="inf",
                      help="comma-separated values, e.g. inf,4,1")
    prat.add_argument("--seed", type=int, default=0)
    prat.add_argument("--threads", type=int, default=None)
    prat.add_argument("--out", default=None)

    return p


def cmd_preprocess(args) -> int:
    t0 = time.perf_counter()
    graph = _load_graph(args.gr, args.co)
    threads = _threads(args)
    if threads:
        set_worker_threads(threads)
    region_of, _k = kmeans_partition(graph, args.c, args.seed)
    root_of = choose_roots(graph, region_of)
    root_spts = None
    if math.isfinite(args.len_to_dic):
        root_spts = [dijkstra_spt(graph, int(r)) for r in root_of]
    plan = assign_dict_parents(graph, region_of, root_of, root_spts, args.len_to_dic)
    with open(args.out, "wb") as sink:
        header = build_archive(
            graph, plan, sink, seed=args.seed, threads=threads
        )
    reader = open_archive(args.out, "mem")
    sizes = reader.sizes()
    write_meta(header, sizes, args.out + ".meta")
    wall = time.perf_counter() - t0
    raw = graph.vertex_count * graph.vertex_count
    print(f"vertices            {graph.vertex_count} "
          f"({graph.vertex_count - graph.real_count} virtual)")
    print(f"regions             {header.region_count}")
    print(f"archive bytes       {sizes.total}")
    print(f"  dictionaries      {sizes.dictionaries}")
    print(f"  streams           {sizes.streams}")
    print(f"  index             {sizes.index}")
    print(f"  tables+header     {sizes.region_table + sizes.header}")
    print(f"raw tree bytes      {raw}")
    print(f"compression ratio   {raw / sizes.total:.2f}")
    print(f"wall time           {wall:.2f}s")
    return EXIT_OK


def cmd_query(args) -> int:
    reader = open_archive(args.archive, args.store)
    with reader:
        if not (0 <= args.source < reader.vertex_count):
            print(
                f"source {args.source} outside [0,{reader.vertex_count})",
                file=sys.stderr,
            )
            return EXIT_INPUT
        if args.global_ids:
            if not args.gr:
                raise _UsageError("--global needs --gr to map local indices")
            graph = _load_graph(args.gr)
            result = query_global(
                reader, graph, args.source,
                mark_unreachable=args.mark_unreachable,
            )
            if args.raw:
                sys.stdout.buffer.write(
                    np.asarray(result, "<i4").tobytes()
                )
            else:
                sys.stdout.write("\n".join(str(int(x)) for x in result) + "\n")
        else:
            spt = query_spt(reader, args.source)
            if args.raw:
                sys.stdout.buffer.write(spt.tobytes())
            else:
                sys.stdout.write(
                    "\n".join(str(int(x)) for x in spt.last_move) + "\n"
                )
    return EXIT_OK


def cmd_verify(args) -> int:
    reader = open_archive(args.archive, args.store)
    with reader:
        graph = _load_graph(args.gr, args.co)
        if graph.vertex_count != reader.vertex_count:
            raise _VerifyFailure(
                f"vertex count mismatch: graph {graph.vertex_count}, "
                f"archive {reader.vertex_count}"
            )
        if args.sample == "all":
            sources = np.arange(reader.vertex_count)
        else:
            try:
                count = int(args.sample)
            except ValueError:
                raise _UsageError("--sample must be an integer or 'all'")
            rng = np.random.default_rng(args.seed)
            count = min(count, reader.vertex_count)
            sources = rng.choice(reader.vertex_count, size=count, replace=False)
        checked = 0
        for s in sources:
            s = int(s)
            try:
                got = query_spt(reader, s)
            except SplzError as e:
                raise _VerifyFailure(f"source {s}: record unreadable: {e}")
            want = dijkstra_spt(graph, s)
            if not np.array_equal(got.last_move, want.last_move):
                diff = int(
                    np.flatnonzero(got.last_move != want.last_move)[0]
                )
                raise _VerifyFailure(
                    f"source {s}: mismatch at vertex {diff} "
                    f"(archive {int(got.last_move[diff])}, "
                    f"oracle {int(want.last_move[diff])})"
                )
            checked += 1
        print(f"verify: OK ({checked}/{len(sources)} sources exact)")
    return EXIT_OK


def cmd_bench(args) -> int:
    reader = open_archive(args.archive, args.store)
    with reader:
        rng = np.random.default_rng(args.seed)
        queries = rng.integers(0, reader.vertex_count, args.queries)
        graph = None
        if args.with_dijkstra:
            if not args.gr:
                raise _UsageError("--with-dijkstra needs --gr")
            graph = _load_graph(args.gr)
        report = run_bench(reader, queries, graph=graph)
        csv = report.to_csv()
    if args.out:
        with open(args.out, "w") as f:
            f.write(csv)
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.stats_cmd == "similarity":
        graph = _load_graph(args.gr, args.co)
        table = similarity_curve(graph, args.pairs, args.seed)
        csv = table.to_csv()
    else:
        graph = _load_graph(args.gr, args.co)
        c_values = [_positive_float(c) for c in args.c.split(",")]
        d_values = [_parse_len_to_dic(d) for d in args.len_to_dic.split(",")]
        table = ratio_sweep(
            graph, c_values, d_values, args.seed, threads=_threads(args)
        )
        csv = table.to_csv()
    if args.out:
        with open(args.out, "w") as f:
            f.write(csv)
    else:
        sys.stdout.write(csv)
    return EXIT_OK


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "query": cmd_query,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.cmd](args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _VerifyFailure as e:
        print(f"verify: FAIL: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (ParseError, FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except SplzError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # pragma: no cover - safety net
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
