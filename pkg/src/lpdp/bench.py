"""Benchmark instances, the timed runner, CSV records and speedup tables."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, Instance, NoPathError, dump_graph, dump_problem, load_graph, load_problem
from .partition import PartitionConfig

CSV_HEADER = ["instance", "solver", "threads", "eps", "partitioner", "time_ms", "status", "weight"]
SOLVERS = ("lpdp", "exhdfs", "dfbnb")


# --- generators --------------------------------------------------------------

@dataclass(frozen=True)
class MazeSpec:
    side: int
    fill: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.side < 2:
            raise ValueError("side must be >= 2")
        if not 0 <= self.fill < 1:
            raise ValueError("fill must be in [0, 1)")


@dataclass(frozen=True)
class Maze:
    spec: MazeSpec
    blocked: np.ndarray
    cells: tuple[tuple[int, int], ...]
    retries: int
    instance: Instance

    def render(self) -> str:
        rows = []
        for r in range(self.spec.side):
            rows.append("".join("#" if self.blocked[r, c] else "." for c in range(self.spec.side)))
        return "\n".join(rows)


def obstacle_count(spec: MazeSpec) -> int:
    # guard against 0.3 * 100 == 30.000000000000004
    return min(math.ceil(round(spec.fill * spec.side ** 2, 9)), spec.side ** 2 - 2)


def build_maze(spec: MazeSpec) -> Maze:
    """Maze with its grid; retries (whole regeneration) until start and target connect."""
    side = spec.side
    n_cells = side * side
    need = obstacle_count(spec)
    attempt = 0
    while True:
        rng = np.random.default_rng([spec.seed, attempt])
        blocked = np.zeros((side, side), dtype=bool)
        free = list(range(1, n_cells - 1))
        for _ in range(need):
            i = int(rng.integers(len(free)))
            cell = free[i]
            free[i] = free[-1]
            free.pop()
            blocked[divmod(cell, side)] = True
        if _corners_connected(blocked):
            break
        attempt += 1
    cells = tuple((r, c) for r in range(side) for c in range(side) if not blocked[r, c])
    index = {cell: i for i, cell in enumerate(cells)}
    edges = []
    for (r, c), i in index.items():
        for nb in ((r + 1, c), (r, c + 1)):
            j = index.get(nb)
            if j is not None:
                edges.append((i, j, 1.0))
    graph = Graph.from_edges(len(cells), edges)
    inst = Instance(graph, index[0, 0], index[side - 1, side - 1])
    return Maze(spec, blocked, cells, attempt, inst)


def gen_maze(spec: MazeSpec) -> Instance:
    """Grid maze: top-left to bottom-right over free cells, unit 4-neighbor edges."""
    return build_maze(spec).instance


def _corners_connected(blocked: np.ndarray) -> bool:
    side = blocked.shape[0]
    seen = np.zeros_like(blocked)
    seen[0, 0] = True
    queue = deque([(0, 0)])
    while queue:
        r, c = queue.popleft()
        if (r, c) == (side - 1, side - 1):
            return True
        for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if 0 <= nr < side and 0 <= nc < side and not blocked[nr, nc] and not seen[nr, nc]:
                seen[nr, nc] = True
                queue.append((nr, nc))
    return False


def bfs_region(graph: Graph, size: int, rng: np.random.Generator) -> tuple[int, list[int]]:
    """Random root and the first ``size`` vertices a breadth-first search from it touches."""
    root = int(rng.integers(graph.vertex_count))
    touched = [root]
    seen = {root}
    queue = deque([root])
    while queue and len(touched) < size:
        v = queue.popleft()
        for u, _ in graph.adjacency[v]:
            if u not in seen and len(touched) < size:
                seen.add(u)
                touched.append(u)
                queue.append(u)
    if len(touched) < size:
        raise ValueError(f"component of vertex {root} has only {len(touched)} vertices")
    return root, touched


def extract_subgraph(graph: Graph, size: int, seed: int, allow_trivial: bool = False) -> Instance:
    """Breadth-first region of ``size`` vertices around a random root, as an induced subgraph.

    The source is the root, the target a uniformly random other touched vertex.
    """
    n = graph.vertex_count
    if size < 1:
        raise ValueError("size must be >= 1")
    if size > n:
        raise ValueError(f"graph has {n} vertices, cannot extract {size}")
    if size == 1 and not allow_trivial:
        raise ValueError("size 1 gives source == target; pass allow_trivial to permit it")
    rng = np.random.default_rng(seed)
    root, touched = bfs_region(graph, size, rng)
    sub, old = graph.induced_subgraph(touched)
    new_id = {v: i for i, v in enumerate(old)}
    if size == 1:
        return Instance(sub, 0, 0)
    target = touched[1 + int(rng.integers(size - 1))]
    return Instance(sub, new_id[root], new_id[target])


# --- instance files ----------------------------------------------------------

def save_instance(instance: Instance, stem: str | Path) -> tuple[Path, Path]:
    """Write ``<stem>.graph`` and the ``<stem>.problem`` sidecar."""
    stem = Path(stem)
    gpath, ppath = stem.with_suffix(".graph"), stem.with_suffix(".problem")
    gpath.write_text(dump_graph(instance.graph))
    ppath.write_text(dump_problem(instance))
    return gpath, ppath


def load_instance(graph_path: str | Path, problem_path: str | Path | None = None) -> Instance:
    graph_path = Path(graph_path)
    problem_path = Path(problem_path) if problem_path else graph_path.with_suffix(".problem")
    with open(graph_path) as fh:
        graph = load_graph(fh)
    with open(problem_path) as fh:
        return load_problem(fh, graph)


def load_suite(directory: str | Path) -> list[tuple[str, Instance]]:
    """Every ``*.graph`` with a matching ``*.problem`` in ``directory``, sorted by name."""
    out = []
    for gpath in sorted(Path(directory).glob("*.graph")):
        if gpath.with_suffix(".problem").exists():
            out.append((gpath.stem, load_instance(gpath)))
    if not out:
        raise FileNotFoundError(f"no .graph/.problem pairs in {directory}")
    return out


# --- runner ------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRecord:
    instance: str
    solver: str
    threads: int
    eps: float | None
    partitioner: str
    time_ms: float
    status: str
    weight: float | None = None

    def __post_init__(self):
        if (self.weight is not None) != (self.status == "solved"):
            raise ValueError("weight must be present exactly when status is 'solved'")

    @property
    def wall_time(self) -> float:
        return self.time_ms / 1000.0

    def sort_key(self):
        return (self.instance, self.solver, self.threads)


def run_one(instance: Instance, solver: str, threads: int = 1, time_limit: float | None = 60.0,
            partition_config: PartitionConfig | None = None, depth_limit: int = 5,
            block_parallelism: bool = True) -> tuple[str, float | None, float]:
    """Run one solver; returns ``(status, weight, seconds)``. Never raises on timeout."""
    from .baselines import dfbnb, exhaustive_dfs
    from .core import SolverTimeout, lpdp
    from .parallel import ParallelConfig

    start = time.perf_counter()
    try:
        if solver == "lpdp":
            pconf = ParallelConfig(threads, depth_limit, block_parallelism) if threads > 1 else None
            result = lpdp(instance, partition_config, pconf, time_limit)
        elif solver == "exhdfs":
            result, _ = exhaustive_dfs(instance, time_limit)
        elif solver == "dfbnb":
            result, _ = dfbnb(instance, time_limit)
        else:
            raise ValueError(f"unknown solver {solver!r}")
    except SolverTimeout:
        return "timeout", None, time.perf_counter() - start
    except NoPathError:
        return "nopath", None, time.perf_counter() - start
    return "solved", result.weight, time.perf_counter() - start


def run_benchmark(instances: Iterable[tuple[str, Instance]], solvers: Sequence[str] = SOLVERS,
                  threads: Sequence[int] = (1,), time_limit: float | None = 60.0,
                  partition_config: PartitionConfig | None = None, depth_limit: int = 5,
                  block_parallelism: bool = True):
    """Yield one :class:`BenchRecord` per (instance, solver, thread count), one run at a time.

    The baselines are sequential, so they get a record only for one thread.
    """
    pconf = partition_config or PartitionConfig()
    for name, inst in instances:
        for solver in solvers:
            for k in threads:
                if solver != "lpdp" and k != 1:
                    continue
                status, weight, secs = run_one(inst, solver, k, time_limit, pconf,
                                               depth_limit, block_parallelism)
                yield BenchRecord(name, solver, k, pconf.epsilon if solver == "lpdp" else None,
                                  "bisection" if solver == "lpdp" else "none",
                                  secs * 1000.0, status, weight)


def emit_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=BenchRecord.sort_key):
        w.writerow([r.instance, r.solver, r.threads, "" if r.eps is None else repr(r.eps),
                    r.partitioner, repr(r.time_ms), r.status,
                    "" if r.weight is None else repr(r.weight)])
    return buf.getvalue()


def parse_csv(text: str) -> list[BenchRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("missing or wrong CSV header")
    out = []
    for row in rows[1:]:
        inst, solver, threads, eps, part, ms, status, weight = row
        out.append(BenchRecord(inst, solver, int(threads), float(eps) if eps else None, part,
                               float(ms), status, float(weight) if weight else None))
    return out


# --- speedups ----------------------------------------------------------------

@dataclass
class SpeedupRow:
    threads: int
    count: int
    average: float
    total: float
    median: float
    big_count: int = 0
    big_average: float = math.nan
    big_total: float = math.nan
    big_median: float = math.nan
    speedups: dict[str, float] = field(default_factory=dict)


def is_big(serial_seconds: float, threads: int) -> bool:
    """An instance counts as big for ``threads`` when the serial run took over ``5 * threads`` s."""
    return serial_seconds > 5.0 * threads


def speedup_table(records: Iterable[BenchRecord], solver: str = "lpdp") -> list[SpeedupRow]:
    """Average, total and median speedup over instances solved by both the serial and parallel run."""
    serial: dict[str, float] = {}
    parallel: dict[int, dict[str, float]] = {}
    for r in records:
        if r.solver != solver or r.status != "solved":
            continue
        if r.threads == 1:
            serial[r.instance] = r.wall_time
        else:
            parallel.setdefault(r.threads, {})[r.instance] = r.wall_time
    rows = []
    for k in sorted(parallel):
        common = sorted(set(serial) & set(parallel[k]))
        if not common:
            continue
        row = _aggregate(k, common, serial, parallel[k])
        big = [i for i in common if is_big(serial[i], k)]
        if big:
            b = _aggregate(k, big, serial, parallel[k])
            row.big_count, row.big_average, row.big_total, row.big_median = b.count, b.average, b.total, b.median
        rows.append(row)
    return rows


def _aggregate(k, names, serial, par) -> SpeedupRow:
    sp = {i: serial[i] / par[i] for i in names}
    vals = list(sp.values())
    return SpeedupRow(k, len(names), statistics.fmean(vals),
                      sum(serial[i] for i in names) / sum(par[i] for i in names),
                      statistics.median(vals), speedups=sp)
