"""Longest paths by dynamic programming over a partition hierarchy.

Every block gets a table mapping each solvable boundary pair set to the
heaviest family of disjoint paths realizing it. A block's table is computed
by searching its auxiliary graph: the boundary nodes of its child blocks,
the original edges running between different children, and a zero-weight
clique over each child's boundary. Walking a clique edge means "route
through the child", which is legal only while the child's table still has
an entry for the pair set accumulated so far.
"""

from __future__ import annotations

import sys
import time
import threading
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

from .graph import Graph, Instance, NoPathError, PathResult, path_weight, validate_path
from .pairsets import BoundaryPairSet, decode, encode, has_proper_pair, key_width
from .partition import PartitionHierarchy, boundary_nodes


class SolverTimeout(RuntimeError):
    """Raised when a solver exceeds its time limit."""

    def __init__(self, message: str = "time limit exceeded", stats=None, incumbent=None):
        super().__init__(message)
        self.stats = stats
        self.incumbent = incumbent


class ReconstructionError(RuntimeError):
    """A table referenced a child entry that does not exist."""


# --- tables ----------------------------------------------------------------

class BlockSolutionTable:
    """Solutions of one block, keyed by packed pair set.

    ``routes[key]`` holds the reconstruction data for an entry: the vertex
    sequences walked in the block's auxiliary graph, one per pair (a single
    vertex for a singleton). On level 0 these are the actual paths.
    Pair sets without a proper pair are never stored; they have weight 0.

    Entries merged from worker processes carry no routes. ``deferred[key]``
    names the branch that found them instead, and :meth:`route` re-runs that
    branch through ``replay`` when the route is first needed.
    """

    def __init__(self, level: int, block: int, boundary: Sequence[int]):
        self.level = level
        self.block = block
        self.boundary = tuple(boundary)
        self.position = {v: i for i, v in enumerate(self.boundary)}
        self.width = key_width(len(self.boundary))
        self.weights: dict[int, float] = {}
        self.routes: dict[int, tuple[tuple[int, ...], ...]] = {}
        self.deferred: dict[int, int] = {}
        self.replay: Callable[[int, int], tuple] | None = None
        self._lock: threading.Lock | None = None

    def __len__(self) -> int:
        return len(self.weights)

    def key(self, pairs) -> int:
        return encode(pairs, self.position, self.width)

    def get(self, key: int) -> float | None:
        w = self.weights.get(key)
        if w is None and not has_proper_pair(key, self.width):
            return 0.0
        return w

    def lookup(self, pairs) -> float | None:
        """Weight for a pair set (synthesizing trivial ones), None if unsolvable."""
        if any(v not in self.position for p in pairs for v in p):
            return None
        return self.get(self.key(pairs))

    def insert_if_better(self, key: int, weight: float, routes) -> bool:
        """Store ``weight`` unless an entry at least as heavy exists; ties keep the incumbent."""
        lock = self._lock
        if lock is None:
            old = self.weights.get(key)
            if old is None or weight > old:
                self.weights[key] = weight
                self.routes[key] = routes
                if self.deferred:
                    self.deferred.pop(key, None)
                return True
            return False
        with lock:
            old = self.weights.get(key)
            if old is None or weight > old:
                self.weights[key] = weight
                self.routes[key] = routes
                return True
            return False

    def make_concurrent(self) -> None:
        self._lock = threading.Lock()

    def freeze(self) -> None:
        self._lock = None

    def merge(self, weights: Mapping[int, float], routes: Mapping[int, tuple]) -> None:
        for key, w in weights.items():
            self.insert_if_better(key, w, routes[key])

    def merge_deferred(self, keys: Sequence[int], weights: Sequence[float], sources: Sequence[int]) -> None:
        """Merge entries whose routes stay behind; ``sources[i]`` is the branch that found ``keys[i]``."""
        mine = self.weights
        get = mine.get
        routes = self.routes
        deferred = self.deferred
        for key, w, src in zip(keys, weights, sources):
            old = get(key)
            if old is None or w > old:
                mine[key] = w
                deferred[key] = src
                if routes:
                    routes.pop(key, None)

    def route(self, key: int):
        """Reconstruction data for ``key``, or None when the entry is absent."""
        r = self.routes.get(key)
        if r is None and key in self.deferred:
            r = self.routes[key] = self.replay(key, self.deferred.pop(key))
        return r

    def entries(self) -> Iterator[tuple[BoundaryPairSet, float]]:
        for key in sorted(self.weights, key=lambda k: decode(k, self.boundary, self.width).pairs):
            yield decode(key, self.boundary, self.width), self.weights[key]

    def as_dict(self) -> dict[BoundaryPairSet, float]:
        return dict(self.entries())

    def dump(self) -> str:
        return "".join(f"{p} -> {w:g}\n" for p, w in self.entries())

    def __repr__(self) -> str:
        return (f"BlockSolutionTable(level={self.level}, block={self.block}, "
                f"boundary={len(self.boundary)}, entries={len(self.weights)})")


# --- auxiliary graph -------------------------------------------------------

@dataclass
class AuxiliaryGraph:
    """Search graph of one block, over local indices ``0..len(vertices)-1``.

    ``adj[i]`` holds ``(j, weight, is_clique)`` triples. ``children[c]`` is
    the child block id (level >= 1) or the vertex itself (level 0).
    """

    level: int
    block: int
    vertices: tuple[int, ...]
    child_of: list[int]
    children: list[int]
    child_boundary: list[tuple[int, ...]]
    cpos: list[int]
    adj: list[tuple[tuple[int, float, bool], ...]]
    boundary: tuple[int, ...]
    brank: list[int]

    def edges(self) -> Iterator[tuple[int, int, float, str]]:
        """Each edge once as global ``(u, v, w, tag)``, tag ``"boundary"`` or ``"clique:<child>"``."""
        for i, row in enumerate(self.adj):
            for j, w, clique in row:
                if i < j:
                    tag = f"clique:{self.children[self.child_of[i]]}" if clique else "boundary"
                    yield self.vertices[i], self.vertices[j], w, tag


def build_auxiliary_graph(graph: Graph, hierarchy: PartitionHierarchy, level: int, block: int,
                          child_tables: Mapping[int, BlockSolutionTable] | None,
                          instance: Instance | None) -> AuxiliaryGraph:
    """Auxiliary graph of ``block``; on level 0 every vertex is its own child."""
    members = hierarchy.members(level, block)
    boundary = tuple(boundary_nodes(graph, hierarchy, level, block, instance))
    if level == 0:
        children = list(members)
        cbound = [(v,) for v in members]
        owner = {v: i for i, v in enumerate(members)}
    else:
        children = hierarchy.children(level, block)
        cbound = []
        for cid in children:
            table = (child_tables or {}).get(cid)
            if table is None:
                raise KeyError(f"missing table for child block {cid} of level-{level} block {block}")
            cbound.append(table.boundary)
        owner = {v: ci for ci, bd in enumerate(cbound) for v in bd}
    vertices = tuple(sorted(owner))
    local = {v: i for i, v in enumerate(vertices)}
    child_of = [owner[v] for v in vertices]
    cpos = [0] * len(vertices)
    for bd in cbound:
        for p, v in enumerate(bd):
            cpos[local[v]] = p
    rows: list[list[tuple[int, float, bool]]] = [[] for _ in vertices]
    for i, v in enumerate(vertices):
        ci = child_of[i]
        for u, w in graph.adjacency[v]:
            j = local.get(u)
            if j is not None and child_of[j] != ci:
                rows[i].append((j, w, False))
        for u in cbound[ci]:
            if u != v:
                rows[i].append((local[u], 0.0, True))
    adj = [tuple(sorted(r)) for r in rows]
    brank = [-1] * len(vertices)
    for r, v in enumerate(boundary):
        brank[local[v]] = r
    return AuxiliaryGraph(level, block, vertices, child_of, children, cbound, cpos, adj, boundary, brank)


# --- search ----------------------------------------------------------------

@dataclass(frozen=True)
class BranchContext:
    """Frozen search state plus the pending call that resumes it.

    ``call`` is ``(vertex, previous, via_clique, path_start, weight, pair_key, depth)``
    in the search's local indices. With ``extend`` set it is ``(pair_key, weight)``
    instead: a just-closed path whose entry and singleton extensions are still due.
    """

    marked: bytes
    child_keys: tuple[int, ...]
    child_pairs: tuple[int, ...]
    child_weights: tuple[float, ...]
    routes: tuple[tuple[int, ...], ...]
    call: tuple
    extend: bool = False


class LPDPSearch:
    """Multi-path exhaustive search over one auxiliary graph.

    Paths start at boundary nodes of the block in increasing id order and
    may only end at a boundary node with a higher id than their start; a
    path may never end where it started. Whenever a path is completed the
    resulting matching, and every extension of it by singletons on free
    boundary nodes, is offered to the output table.
    """

    def __init__(self, aux: AuxiliaryGraph, child_tables: Sequence[BlockSolutionTable | None],
                 out: BlockSolutionTable, deadline: float | None = None,
                 check_order: bool = False):
        self.aux = aux
        self.child_tables = child_tables
        self.out = out
        self.deadline = deadline
        self.check_order = check_order
        self.nodes = 0
        self.branches: list[BranchContext] = []
        self._limit = -1
        nchild = len(aux.children)
        self.marked = bytearray(len(aux.vertices))
        self.child_keys = [0] * nchild
        self.child_pairs = [0] * nchild
        self.child_weights = [0.0] * nchild
        self.routes: list[list[int]] = []
        self._visit, self._extend = self._compile()

    def run(self) -> None:
        """Full search from every boundary node but the last."""
        self._limit = -1
        self._roots()

    def enumerate_branches(self, depth_limit: int) -> list[BranchContext]:
        """Run the search, deferring every call at recursion depth ``depth_limit``."""
        if depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")
        self.branches = []
        self._limit = depth_limit
        try:
            self._roots()
        finally:
            self._limit = -1
        return self.branches

    def run_branch(self, ctx: BranchContext) -> None:
        self.marked[:] = ctx.marked
        self.child_keys[:] = ctx.child_keys
        self.child_pairs[:] = ctx.child_pairs
        self.child_weights[:] = ctx.child_weights
        self.routes[:] = [list(r) for r in ctx.routes]
        self._limit = -1
        if ctx.extend:
            self._extend(*ctx.call)
        else:
            self._visit(*ctx.call)
        self.routes.clear()

    def _roots(self) -> None:
        aux = self.aux
        bverts = [aux.vertices.index(v) for v in aux.boundary]
        for b in bverts[:-1]:
            self._visit(b, -1, False, -1, 0.0, 0, 0)

    def _compile(self) -> Callable:
        aux = self.aux
        adj = aux.adj
        child = aux.child_of
        cpos = aux.cpos
        brank = aux.brank
        local = {v: i for i, v in enumerate(aux.vertices)}
        bverts = [local[v] for v in aux.boundary]
        nb = len(bverts)
        tables = [t.weights if t is not None else None for t in self.child_tables]
        widths = [t.width if t is not None else 8 for t in self.child_tables]
        sh = [widths[child[i]] * cpos[i] for i in range(len(adj))]
        sing = [(cpos[i] + 1) << sh[i] for i in range(len(adj))]
        bw = key_width(nb)
        bsh = [bw * r for r in range(nb)]
        bsing = [(r + 1) << bsh[r] for r in range(nb)]
        marked = self.marked
        ckey = self.child_keys
        cnp = self.child_pairs
        cw = self.child_weights
        routes = self.routes
        out_w = self.out.weights
        insert = self.out.insert_if_better
        branches = self.branches
        deadline = self.deadline
        check_order = self.check_order
        perf = time.perf_counter
        gid = aux.vertices
        search = self

        def emit(pk, weight):
            old = out_w.get(pk)
            if old is None or weight > old:
                insert(pk, weight, tuple(tuple([gid[i] for i in r]) for r in routes))

        def singletons(i, pk, weight):
            for j in range(i, nb):
                x = bverts[j]
                if marked[x]:
                    continue
                c = child[x]
                okey = ckey[c]
                nkey = okey + sing[x]
                ow = cw[c]
                if cnp[c]:
                    nw = tables[c].get(nkey)
                    if nw is None:
                        continue
                else:
                    nw = 0.0
                ckey[c] = nkey
                cw[c] = nw
                marked[x] = 1
                routes.append([x])
                w2 = weight + nw - ow
                pk2 = pk + bsing[j]
                emit(pk2, w2)
                singletons(j + 1, pk2, w2)
                routes.pop()
                marked[x] = 0
                ckey[c] = okey
                cw[c] = ow

        def extend(pk, weight):
            emit(pk, weight)
            singletons(0, pk, weight)

        def defer(args, ext=False):
            search.branches.append(BranchContext(
                bytes(marked), tuple(ckey), tuple(cnp), tuple(cw),
                tuple(map(tuple, routes)), args, ext))

        def visit(v, u, vc, start, weight, pk, depth):
            c = child[v]
            okey = ckey[c]
            onp = cnp[c]
            if vc:
                nkey = okey + ((cpos[v] - cpos[u]) << sh[u]) + ((cpos[u] + 1) << sh[v])
                np_ = onp + 1
            else:
                nkey = okey + sing[v]
                np_ = onp
            ow = cw[c]
            if np_:
                nw = tables[c].get(nkey)
                if nw is None:
                    return
            else:
                nw = 0.0
            search.nodes += 1
            if deadline is not None and not search.nodes & 4095 and perf() > deadline:
                raise SolverTimeout()
            marked[v] = 1
            ckey[c] = nkey
            cnp[c] = np_
            cw[c] = nw
            weight += nw - ow
            nd = depth + 1
            defer_next = nd == search._limit
            if u < 0:
                routes.append([v])
                start = v
            else:
                routes[-1].append(v)
                rv = brank[v]
                rs = brank[start]
                if rv > rs:
                    pk2 = pk + ((rv + 1) << bsh[rs]) + ((rs + 1) << bsh[rv])
                    if check_order:
                        _check_order(routes, brank)
                    if search._limit > 0:
                        # the singleton sweep is the bulk of the work near the root
                        defer((pk2, weight), True)
                    else:
                        extend(pk2, weight)
                    for r in range(rs + 1, nb):
                        w = bverts[r]
                        if not marked[w]:
                            if defer_next:
                                defer((w, -1, False, -1, weight, pk2, nd))
                            else:
                                visit(w, -1, False, -1, weight, pk2, nd)
            for w, ew, isc in adj[v]:
                if not marked[w] and not (isc and vc):
                    if defer_next:
                        defer((w, v, isc, start, weight + ew, pk, nd))
                    else:
                        visit(w, v, isc, start, weight + ew, pk, nd)
            if u < 0:
                routes.pop()
            else:
                routes[-1].pop()
            marked[v] = 0
            ckey[c] = okey
            cnp[c] = onp
            cw[c] = ow

        return visit, extend


def _check_order(routes, brank) -> None:
    prev = -1
    for r in routes:
        a, b = brank[r[0]], brank[r[-1]]
        assert a >= 0 and b > a, "path must end at a higher boundary id than it started"
        assert a > prev, "paths must start at increasing boundary ids"
        prev = a


# --- solving ---------------------------------------------------------------

def _ensure_recursion(aux: AuxiliaryGraph) -> None:
    need = 4 * len(aux.vertices) + 200
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


def solve_block(graph: Graph, hierarchy: PartitionHierarchy, level: int, block: int,
                child_tables: Mapping[int, BlockSolutionTable] | None, instance: Instance | None,
                deadline: float | None = None, check_order: bool = False) -> BlockSolutionTable:
    """Table for one block from the (complete) tables of its children."""
    aux = build_auxiliary_graph(graph, hierarchy, level, block, child_tables, instance)
    table = BlockSolutionTable(level, block, aux.boundary)
    if len(aux.boundary) < 2:
        return table
    ctabs = child_table_list(aux, child_tables)
    _ensure_recursion(aux)
    LPDPSearch(aux, ctabs, table, deadline, check_order).run()
    return table


def child_table_list(aux: AuxiliaryGraph, child_tables: Mapping[int, BlockSolutionTable] | None):
    if aux.level == 0:
        return [None] * len(aux.children)
    return [child_tables[cid] for cid in aux.children]


Tables = dict[tuple[int, int], BlockSolutionTable]


def solve_tables(instance: Instance, hierarchy: PartitionHierarchy, deadline: float | None = None,
                 check_order: bool = False) -> Tables:
    """Serial bottom-up solve of every block; returns ``{(level, block): table}``."""
    _check_hierarchy(instance, hierarchy)
    tables: Tables = {}
    for level in range(hierarchy.level_count):
        for block in range(hierarchy.block_count(level)):
            tables[level, block] = solve_block(instance.graph, hierarchy, level, block,
                                               level_tables(tables, level - 1), instance,
                                               deadline, check_order)
    return tables


def level_tables(tables: Tables, level: int) -> dict[int, BlockSolutionTable]:
    if level < 0:
        return {}
    return {b: t for (lv, b), t in tables.items() if lv == level}


def _check_hierarchy(instance: Instance, hierarchy: PartitionHierarchy) -> None:
    if hierarchy.vertex_count != instance.graph.vertex_count:
        raise ValueError(f"hierarchy covers {hierarchy.vertex_count} vertices, graph has "
                         f"{instance.graph.vertex_count}")


def solve_instance(instance: Instance, hierarchy: PartitionHierarchy, mode: str = "serial",
                   config=None, time_limit: float | None = None) -> PathResult:
    """Longest simple source-target path; ``mode`` is ``"serial"`` or ``"parallel"``."""
    s, t = instance.source, instance.target
    if s == t:
        return PathResult((s,), 0.0)
    deadline = None if time_limit is None else time.perf_counter() + time_limit
    if mode == "serial":
        tables = solve_tables(instance, hierarchy, deadline)
    elif mode == "parallel":
        from .parallel import ParallelConfig, solve_tables_parallel
        tables = solve_tables_parallel(instance, hierarchy, config or ParallelConfig(), deadline)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return reconstruct_path(tables, hierarchy, instance)


def top_weight(tables: Tables, hierarchy: PartitionHierarchy, instance: Instance) -> float | None:
    top = tables[hierarchy.level_count - 1, 0]
    return top.lookup([(instance.source, instance.target)])


def reconstruct_path(tables: Tables, hierarchy: PartitionHierarchy, instance: Instance) -> PathResult:
    """Unpack the top-level entry for ``{s, t}`` down to level-0 paths."""
    s, t = instance.source, instance.target
    if s == t:
        return PathResult((s,), 0.0)
    top_level = hierarchy.level_count - 1
    top = tables[top_level, 0]
    key = top.key([(s, t)])
    if key not in top.weights:
        raise NoPathError(f"no path between {s} and {t}")
    paths = _Unpacker(tables, hierarchy).unpack(top_level, 0, key)
    seq = paths[min(s, t), max(s, t)]
    if seq[0] != s:
        seq = seq[::-1]
    result = PathResult(tuple(seq), path_weight(instance.graph, seq))
    validate_path(instance.graph, result, s, t)
    if result.weight != top.weights[key] and abs(result.weight - top.weights[key]) > 1e-9 * max(1.0, result.weight):
        raise ReconstructionError(f"reconstructed weight {result.weight} != table weight {top.weights[key]}")
    return result


class _Unpacker:
    def __init__(self, tables: Tables, hierarchy: PartitionHierarchy):
        self.tables = tables
        self.hierarchy = hierarchy
        self.memo: dict[tuple[int, int, int], dict[tuple[int, int], list[int]]] = {}

    def unpack(self, level: int, block: int, key: int) -> dict[tuple[int, int], list[int]]:
        """Real vertex paths for an entry, keyed by sorted endpoint pair."""
        mk = (level, block, key)
        if mk in self.memo:
            return self.memo[mk]
        table = self.tables[level, block]
        routes = table.route(key)
        if routes is None:
            if has_proper_pair(key, table.width):
                raise ReconstructionError(f"level {level} block {block}: no entry for "
                                          f"{decode(key, table.boundary, table.width)}")
            p = decode(key, table.boundary, table.width)
            return {(a, a): [a] for a, _ in p.pairs}
        if level == 0:
            out = {(min(r[0], r[-1]), max(r[0], r[-1])): list(r) for r in routes}
        else:
            below = self.hierarchy.levels[level - 1]
            child_pairs = induced_child_pairs(routes, below)
            expanded = {}
            for cid, pairs in child_pairs.items():
                ctab = self.tables[level - 1, cid]
                expanded[cid] = self.unpack(level - 1, cid, ctab.key(pairs))
            out = {}
            for r in routes:
                seq = [r[0]]
                for x, y in zip(r, r[1:]):
                    cx = int(below[x])
                    if cx == int(below[y]):
                        inner = expanded[cx][min(x, y), max(x, y)]
                        seq.extend(inner[1:] if inner[0] == x else inner[-2::-1])
                    else:
                        seq.append(y)
                out[min(r[0], r[-1]), max(r[0], r[-1])] = seq
        self.memo[mk] = out
        return out


def induced_child_pairs(routes, assignment) -> dict[int, list[tuple[int, int]]]:
    """Per-child pair sets induced by auxiliary routes (clique edges become pairs)."""
    pairs: dict[int, list[tuple[int, int]]] = {}
    for r in routes:
        n = len(r)
        for i, v in enumerate(r):
            c = int(assignment[v])
            prev_same = i > 0 and int(assignment[r[i - 1]]) == c
            next_same = i + 1 < n and int(assignment[r[i + 1]]) == c
            if next_same:
                a, b = v, r[i + 1]
                pairs.setdefault(c, []).append((min(a, b), max(a, b)))
            elif not prev_same:
                pairs.setdefault(c, []).append((v, v))
    return pairs


def lpdp(instance: Instance, partition_config=None, parallel_config=None,
         time_limit: float | None = None) -> PathResult:
    """Partition with the internal partitioner, then solve (timing covers both)."""
    from .partition import build_hierarchy
    start = time.perf_counter()
    hierarchy = build_hierarchy(instance.graph, partition_config)
    remaining = None if time_limit is None else max(0.0, time_limit - (time.perf_counter() - start))
    if parallel_config is not None and parallel_config.thread_count > 1:
        return solve_instance(instance, hierarchy, "parallel", parallel_config, remaining)
    return solve_instance(instance, hierarchy, "serial", None, remaining)
