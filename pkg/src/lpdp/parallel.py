"""Parallel solving: independent blocks and depth-limited splitting of the block search.

The search of one block is cut at a fixed recursion depth. Calls below the
cut, and the singleton sweeps of paths closed above it, are frozen into
:class:`~lpdp.core.BranchContext` objects and placed in a queue; workers pull
small runs of branches until the queue is empty, so fast workers simply take
more of them.

Two backends are provided. ``"process"`` forks worker processes that inherit
the frozen child tables and the branch list. Each keeps a private table of
weights and the branch that found each entry; these are merged into the block
table with insert-if-better once the queue drains, and a route is rebuilt by
replaying its branch only when reconstruction asks for it. ``"thread"`` runs
workers as threads writing to one lock-protected table; it is limited by
the interpreter lock and mainly exists to exercise the concurrent table.
"""

from __future__ import annotations

import multiprocessing as mp
import os
import gc
import queue
import threading
import time
import traceback
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .core import (AuxiliaryGraph, BlockSolutionTable, BranchContext, LPDPSearch, SolverTimeout,
                   Tables, _check_hierarchy, _ensure_recursion, build_auxiliary_graph,
                   child_table_list, level_tables, solve_block, solve_tables)
from .graph import Instance
from .partition import PartitionHierarchy


@dataclass(frozen=True)
class ParallelConfig:
    thread_count: int = 1
    depth_limit: int = 5
    block_parallelism: bool = True
    backend: str = "process"
    # branch work done in the parent before forking; small blocks never fork
    warmup: float = 0.05

    def __post_init__(self):
        if self.thread_count < 1:
            raise ValueError("thread_count must be >= 1")
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")
        if self.backend not in ("process", "thread"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class RunStats:
    """Counters from one parallel execution (summed over jobs)."""

    branches: int = 0
    executed: int = 0
    enumeration_nodes: int = 0
    branch_nodes: int = 0
    forked_workers: int = 0
    per_worker: list[int] = field(default_factory=list)


@dataclass
class _Job:
    aux: AuxiliaryGraph
    child_tables: list
    table: BlockSolutionTable
    branches: list[BranchContext]


def enumerate_branches(aux: AuxiliaryGraph, child_tables: Sequence[BlockSolutionTable | None],
                       depth_limit: int, out: BlockSolutionTable,
                       deadline: float | None = None, stats: RunStats | None = None) -> list[BranchContext]:
    """Depth-limited search; shallow candidates go to ``out``, deeper calls become branches."""
    if len(aux.boundary) < 2:
        return []
    _ensure_recursion(aux)
    search = LPDPSearch(aux, child_tables, out, deadline)
    branches = search.enumerate_branches(depth_limit)
    if stats is not None:
        stats.enumeration_nodes += search.nodes
        stats.branches += len(branches)
    return branches


def run_block_parallel(aux: AuxiliaryGraph, child_tables: Sequence[BlockSolutionTable | None],
                       config: ParallelConfig, deadline: float | None = None,
                       stats: RunStats | None = None) -> BlockSolutionTable:
    """Solve one block with branch splitting; the table has the serial table's weights entry for entry."""
    table = BlockSolutionTable(aux.level, aux.block, aux.boundary)
    if len(aux.boundary) < 2:
        return table
    if config.thread_count == 1:
        search = LPDPSearch(aux, child_tables, table, deadline)
        _ensure_recursion(aux)
        search.run()
        if stats is not None:
            stats.enumeration_nodes += search.nodes
        return table
    stats = stats if stats is not None else RunStats()
    branches = enumerate_branches(aux, child_tables, config.depth_limit, table, deadline, stats)
    execute_jobs([_Job(aux, list(child_tables), table, branches)], config, deadline, stats)
    return table


def execute_jobs(jobs: list[_Job], config: ParallelConfig, deadline: float | None,
                 stats: RunStats) -> None:
    """Drain the branch queue of all ``jobs`` into their tables."""
    items = [(j, b) for j, job in enumerate(jobs) for b in range(len(job.branches))]
    if not items:
        return
    if config.backend == "thread":
        _execute_threads(jobs, items, config, deadline, stats)
    else:
        _execute_processes(jobs, items, config, deadline, stats)


def _execute_threads(jobs, items, config, deadline, stats) -> None:
    work: queue.SimpleQueue = queue.SimpleQueue()
    for it in items:
        work.put(it)
    for job in jobs:
        job.table.make_concurrent()
    counts = [0] * config.thread_count
    nodes = [0] * config.thread_count
    errors: list[BaseException] = []

    def worker(wid: int):
        searches: dict[int, LPDPSearch] = {}
        try:
            while not errors:
                try:
                    j, b = work.get_nowait()
                except queue.Empty:
                    break
                s = searches.get(j)
                if s is None:
                    job = jobs[j]
                    s = searches[j] = LPDPSearch(job.aux, job.child_tables, job.table, deadline)
                s.run_branch(jobs[j].branches[b])
                counts[wid] += 1
        except BaseException as exc:  # re-raised in the caller
            errors.append(exc)
        nodes[wid] = sum(s.nodes for s in searches.values())

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(config.thread_count)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    for job in jobs:
        job.table.freeze()
    stats.executed += sum(counts)
    stats.branch_nodes += sum(nodes)
    stats.per_worker.extend(counts)
    if errors:
        raise errors[0]


_FORK_STATE: tuple | None = None
CHUNKS_PER_WORKER = 16


class _SourceTable(BlockSolutionTable):
    """Worker-side table that remembers which branch found each entry instead of its route.

    Routes are large and only a handful are ever unpacked, so they are
    rebuilt on demand by re-running the branch (see ``_replayer``).
    """

    branch = -1

    def insert_if_better(self, key, weight, routes):
        old = self.weights.get(key)
        if old is None or weight > old:
            self.weights[key] = weight
            self.routes[key] = self.branch
            return True
        return False


def _replayer(job: _Job):
    def replay(key: int, branch: int):
        # within one branch the first route reaching the best weight is stored, as in the worker
        scratch = BlockSolutionTable(job.aux.level, job.aux.block, job.aux.boundary)
        LPDPSearch(job.aux, job.child_tables, scratch).run_branch(job.branches[branch])
        if scratch.weights.get(key) != job.table.weights[key]:
            raise RuntimeError(f"replaying branch {branch} did not reproduce entry {key}")
        return scratch.routes[key]
    return replay


def _process_worker(task_q, result_q) -> None:
    jobs, items, deadline = _FORK_STATE
    local: dict[int, BlockSolutionTable] = {}
    searches: dict[int, LPDPSearch] = {}
    done = 0
    try:
        while True:
            chunk = task_q.get()
            if chunk is None:
                break
            # items were inherited through fork; only index ranges travel
            for j, b in items[chunk[0]:chunk[1]]:
                s = searches.get(j)
                if s is None:
                    job = jobs[j]
                    local[j] = _SourceTable(job.aux.level, job.aux.block, job.aux.boundary)
                    s = searches[j] = LPDPSearch(job.aux, job.child_tables, local[j], deadline)
                local[j].branch = b
                s.run_branch(jobs[j].branches[b])
                done += 1
    except SolverTimeout:
        result_q.put(("timeout", None, done, 0))
        return
    except BaseException:
        result_q.put(("error", traceback.format_exc(), done, 0))
        return
    payload = {j: (list(t.weights), list(t.weights.values()), list(t.routes.values()))
               for j, t in local.items()}
    result_q.put(("ok", payload, done, sum(s.nodes for s in searches.values())))


def _execute_processes(jobs, items, config, deadline, stats) -> None:
    global _FORK_STATE
    # warm-up in the parent: cheap jobs finish here without paying for a fork
    searches: dict[int, LPDPSearch] = {}
    start = time.perf_counter()
    pos = 0
    while pos < len(items) and time.perf_counter() - start < config.warmup:
        j, b = items[pos]
        s = searches.get(j)
        if s is None:
            job = jobs[j]
            s = searches[j] = LPDPSearch(job.aux, job.child_tables, job.table, deadline)
        s.run_branch(jobs[j].branches[b])
        pos += 1
    stats.executed += pos
    stats.branch_nodes += sum(s.nodes for s in searches.values())
    rest = items[pos:]
    if not rest:
        stats.per_worker.append(pos)
        return

    ctx = mp.get_context("fork")
    task_q = ctx.Queue()
    result_q = ctx.Queue()
    nworkers = min(config.thread_count, len(rest))
    # several chunks per worker so that the queue still balances uneven branches
    step = max(1, -(-len(rest) // (nworkers * CHUNKS_PER_WORKER)))
    for lo in range(0, len(rest), step):
        task_q.put((lo, min(lo + step, len(rest))))
    for _ in range(nworkers):
        task_q.put(None)
    _FORK_STATE = (jobs, rest, deadline)
    procs = [ctx.Process(target=_process_worker, args=(task_q, result_q), daemon=True)
             for _ in range(nworkers)]
    # keep the children's collector off the inherited heap (copy-on-write)
    gc.freeze()
    try:
        for p in procs:
            p.start()
        results = []
        while len(results) < nworkers:
            try:
                results.append(result_q.get(timeout=1.0))
            except queue.Empty:
                if not any(p.is_alive() for p in procs) and result_q.empty():
                    raise RuntimeError("worker process died without reporting")
    finally:
        gc.unfreeze()
        _FORK_STATE = None
        for p in procs:
            p.join(timeout=5)
            if p.is_alive():
                p.kill()
    stats.forked_workers += nworkers
    stats.per_worker.extend([pos] + [r[2] for r in results])
    for status, payload, done, nodes in results:
        if status == "timeout":
            raise SolverTimeout()
        if status == "error":
            raise RuntimeError(f"worker failed:\n{payload}")
    for status, payload, done, nodes in results:
        stats.executed += done
        stats.branch_nodes += nodes
        for j, (keys, weights, sources) in payload.items():
            jobs[j].table.merge_deferred(keys, weights, sources)
    for job in jobs:
        if job.table.deferred:
            job.table.replay = _replayer(job)


# --- block scheduling --------------------------------------------------------

def schedule_blocks(hierarchy: PartitionHierarchy, task: Callable[[int, int], object],
                    config: ParallelConfig, log: list | None = None) -> dict[tuple[int, int], object]:
    """Run ``task(level, block)`` for every block, each after all of its children.

    With block parallelism on and more than one thread, blocks become ready
    as soon as their children finish and run on a thread pool; otherwise the
    order is bottom-up by level, then by block id.
    """
    done: dict[tuple[int, int], object] = {}
    lock = threading.Lock()

    def run(level: int, block: int):
        if level > 0:
            with lock:
                missing = [c for c in hierarchy.children(level, block) if (level - 1, c) not in done]
            assert not missing, f"block ({level}, {block}) started before children {missing}"
        result = task(level, block)
        with lock:
            done[level, block] = result
            if log is not None:
                log.append((level, block))
        return result

    if not config.block_parallelism or config.thread_count == 1:
        for level in range(hierarchy.level_count):
            for block in range(hierarchy.block_count(level)):
                run(level, block)
        return done

    waiting = {}
    for level in range(1, hierarchy.level_count):
        for block in range(hierarchy.block_count(level)):
            waiting[level, block] = len(hierarchy.children(level, block))
    with ThreadPoolExecutor(max_workers=config.thread_count) as pool:
        futures = {pool.submit(run, 0, b): (0, b) for b in range(hierarchy.block_count(0))}
        while futures:
            finished, _ = wait(futures, return_when=FIRST_COMPLETED)
            for fut in finished:
                level, block = futures.pop(fut)
                fut.result()
                if level + 1 < hierarchy.level_count:
                    parent = (level + 1, hierarchy.parent(level, block))
                    waiting[parent] -= 1
                    if waiting[parent] == 0:
                        futures[pool.submit(run, *parent)] = parent
    return done


def solve_tables_parallel(instance: Instance, hierarchy: PartitionHierarchy, config: ParallelConfig,
                          deadline: float | None = None, stats: RunStats | None = None) -> Tables:
    """Parallel counterpart of :func:`lpdp.core.solve_tables` with identical table contents."""
    _check_hierarchy(instance, hierarchy)
    if config.thread_count == 1:
        return solve_tables(instance, hierarchy, deadline)
    stats = stats if stats is not None else RunStats()
    graph = instance.graph
    tables: Tables = {}

    if config.backend == "thread":
        def task(level, block):
            below = level_tables(tables, level - 1)
            aux = build_auxiliary_graph(graph, hierarchy, level, block, below, instance)
            t = run_block_parallel(aux, child_table_list(aux, below), config, deadline, stats)
            tables[level, block] = t
            return t
        schedule_blocks(hierarchy, task, config)
        return tables

    for level in range(hierarchy.level_count):
        below = level_tables(tables, level - 1)
        groups = ([list(range(hierarchy.block_count(level)))] if config.block_parallelism
                  else [[b] for b in range(hierarchy.block_count(level))])
        for group in groups:
            jobs = []
            for block in group:
                aux = build_auxiliary_graph(graph, hierarchy, level, block, below, instance)
                table = BlockSolutionTable(level, block, aux.boundary)
                tables[level, block] = table
                ctabs = child_table_list(aux, below)
                branches = enumerate_branches(aux, ctabs, config.depth_limit, table, deadline, stats)
                if branches:
                    jobs.append(_Job(aux, ctabs, table, branches))
            execute_jobs(jobs, config, deadline, stats)
    return tables


def profile_block_dominance(instance: Instance, hierarchy: PartitionHierarchy,
                            time_limit: float | None = None) -> dict[tuple[int, int], float]:
    """Share of serial solve time spent in each block; shares sum to 1."""
    _check_hierarchy(instance, hierarchy)
    deadline = None if time_limit is None else time.perf_counter() + time_limit
    tables: Tables = {}
    spent: dict[tuple[int, int], float] = {}
    for level in range(hierarchy.level_count):
        below = level_tables(tables, level - 1)
        for block in range(hierarchy.block_count(level)):
            t0 = time.perf_counter()
            tables[level, block] = solve_block(instance.graph, hierarchy, level, block, below,
                                               instance, deadline)
            spent[level, block] = time.perf_counter() - t0
    total = sum(spent.values())
    if total <= 0:
        return {k: 1.0 / len(spent) for k in spent}
    return {k: v / total for k, v in spent.items()}
