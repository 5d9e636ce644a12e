"""Command line: solve, generate instances, partition and benchmark.

Vertex ids on the command line and in files are 1-based.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .graph import GraphFormatError, Instance, NoPathError, load_graph, load_problem

SUITE_DEFAULT_SIDES = range(16, 25)


def _read_graph(path):
    with open(path) as fh:
        return load_graph(fh)


def _load_instance(args) -> Instance:
    graph = _read_graph(args.graph)
    if args.problem:
        with open(args.problem) as fh:
            return load_problem(fh, graph)
    if args.source is None or args.target is None:
        sidecar = Path(args.graph).with_suffix(".problem")
        if not sidecar.exists():
            raise SystemExit("give --source/--target, --problem, or a .problem sidecar")
        with open(sidecar) as fh:
            return load_problem(fh, graph)
    for name, v in (("source", args.source), ("target", args.target)):
        if not 1 <= v <= graph.vertex_count:
            raise SystemExit(f"--{name} {v} out of range 1..{graph.vertex_count}")
    return Instance(graph, args.source - 1, args.target - 1)


def cmd_solve(args) -> int:
    from .baselines import dfbnb, exhaustive_dfs
    from .core import SolverTimeout, lpdp, solve_instance
    from .parallel import ParallelConfig
    from .partition import PartitionConfig, import_hierarchy

    inst = _load_instance(args)
    start = time.perf_counter()
    try:
        if args.solver == "lpdp":
            pconf = ParallelConfig(args.threads, args.depth_limit, not args.no_block_parallelism,
                                   args.backend)
            if args.hierarchy:
                with open(args.hierarchy) as fh:
                    h = import_hierarchy(fh, inst.graph)
                mode = "parallel" if args.threads > 1 else "serial"
                result = solve_instance(inst, h, mode, pconf, args.time_limit)
            else:
                part = PartitionConfig(epsilon=args.eps, target_block_size=args.target_block_size,
                                       seed=args.seed)
                result = lpdp(inst, part, pconf, args.time_limit)
        elif args.solver == "exhdfs":
            result, _ = exhaustive_dfs(inst, args.time_limit)
        else:
            result, _ = dfbnb(inst, args.time_limit)
    except SolverTimeout:
        print(f"status timeout after {time.perf_counter() - start:.3f}s")
        return 2
    except NoPathError:
        print("status nopath")
        return 1
    elapsed = time.perf_counter() - start
    print("status solved")
    print(f"weight {result.weight:g}")
    print(f"time {elapsed:.3f}s")
    print("path " + " ".join(str(v + 1) for v in result.vertices))
    return 0


def _write_instance(inst: Instance, out: str | None) -> None:
    from .bench import save_instance
    from .graph import dump_graph, dump_problem

    if out:
        gpath, ppath = save_instance(inst, out)
        print(f"wrote {gpath} and {ppath}", file=sys.stderr)
    else:
        sys.stdout.write(dump_graph(inst.graph))
        sys.stdout.write("% problem: " + dump_problem(inst))


def cmd_gen_maze(args) -> int:
    from .bench import MazeSpec, build_maze

    maze = build_maze(MazeSpec(args.side, args.fill, args.seed))
    if args.show:
        print(maze.render(), file=sys.stderr)
    _write_instance(maze.instance, args.out)
    return 0


def cmd_gen_subgraph(args) -> int:
    from .bench import extract_subgraph

    graph = _read_graph(args.graph)
    _write_instance(extract_subgraph(graph, args.size, args.seed, args.allow_trivial), args.out)
    return 0


def cmd_gen_suite(args) -> int:
    from .bench import MazeSpec, gen_maze, save_instance

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for side in range(args.min_side, args.max_side + 1):
        for seed in range(args.seeds):
            save_instance(gen_maze(MazeSpec(side, args.fill, seed)), out / f"maze{side}_s{seed}")
    return 0


def cmd_partition(args) -> int:
    from .partition import PartitionConfig, build_hierarchy, dump_hierarchy, edge_cut

    graph = _read_graph(args.graph)
    conf = PartitionConfig(epsilon=args.eps, target_block_size=args.target_block_size,
                           fanout=args.fanout, seed=args.seed)
    h = build_hierarchy(graph, conf)
    text = dump_hierarchy(h)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for level in range(h.level_count):
        cut = edge_cut(graph, h.levels[level].tolist())
        print(f"level {level}: {h.block_count(level)} blocks, cut {cut}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    from .bench import emit_csv, load_suite, run_benchmark, speedup_table
    from .partition import PartitionConfig

    suite = load_suite(args.suite)
    solvers = args.solvers.split(",")
    threads = [int(x) for x in args.threads.split(",")]
    records = []
    for rec in run_benchmark(suite, solvers, threads, args.time_limit,
                             PartitionConfig(epsilon=args.eps), args.depth_limit):
        print(f"{rec.instance} {rec.solver} t={rec.threads} {rec.status} "
              f"{rec.time_ms / 1000:.3f}s", file=sys.stderr)
        records.append(rec)
    text = emit_csv(records)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for row in speedup_table(records):
        print(f"threads {row.threads}: n={row.count} avg {row.average:.3f} tot {row.total:.3f} "
              f"med {row.median:.3f}; big n={row.big_count}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lpdp", description="Exact longest simple paths.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="longest path between two vertices")
    s.add_argument("--graph", required=True)
    s.add_argument("--source", type=int)
    s.add_argument("--target", type=int)
    s.add_argument("--problem", help="file holding 's t'")
    s.add_argument("--solver", choices=["lpdp", "exhdfs", "dfbnb"], default="lpdp")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--backend", choices=["process", "thread"], default="process")
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--target-block-size", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--hierarchy", help="hierarchy file from 'partition'")
    s.add_argument("--depth-limit", type=int, default=5)
    s.add_argument("--no-block-parallelism", action="store_true")
    s.add_argument("--time-limit", type=float, default=None)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="generate instances")
    gsub = g.add_subparsers(dest="kind", required=True)
    m = gsub.add_parser("maze")
    m.add_argument("--side", type=int, required=True)
    m.add_argument("--fill", type=float, default=0.3)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", help="output stem; writes STEM.graph and STEM.problem")
    m.add_argument("--show", action="store_true", help="draw the grid on stderr")
    m.set_defaults(func=cmd_gen_maze)
    sg = gsub.add_parser("subgraph")
    sg.add_argument("--graph", required=True)
    sg.add_argument("--size", type=int, required=True)
    sg.add_argument("--seed", type=int, default=0)
    sg.add_argument("--out")
    sg.add_argument("--allow-trivial", action="store_true")
    sg.set_defaults(func=cmd_gen_subgraph)
    su = gsub.add_parser("suite", help="directory of mazes for 'bench'")
    su.add_argument("--out", required=True)
    su.add_argument("--min-side", type=int, default=SUITE_DEFAULT_SIDES.start)
    su.add_argument("--max-side", type=int, default=SUITE_DEFAULT_SIDES.stop - 1)
    su.add_argument("--seeds", type=int, default=1)
    su.add_argument("--fill", type=float, default=0.3)
    su.set_defaults(func=cmd_gen_suite)

    b = sub.add_parser("bench", help="time solvers over a suite, write CSV")
    b.add_argument("--suite", required=True)
    b.add_argument("--solvers", default="lpdp,exhdfs,dfbnb")
    b.add_argument("--threads", default="1")
    b.add_argument("--time-limit", type=float, default=60.0)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--depth-limit", type=int, default=5)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    pa = sub.add_parser("partition", help="build and write a partition hierarchy")
    pa.add_argument("--graph", required=True)
    pa.add_argument("--eps", type=float, default=0.1)
    pa.add_argument("--target-block-size", type=int, default=16)
    pa.add_argument("--fanout", type=int, default=2, choices=[2, 4, 8])
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--out")
    pa.set_defaults(func=cmd_partition)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphFormatError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
