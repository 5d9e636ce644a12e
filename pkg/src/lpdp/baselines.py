"""Reference solvers: exhaustive depth-first search and depth-first branch and bound."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .core import SolverTimeout
from .graph import Instance, NoPathError, PathResult


@dataclass
class SolverStats:
    expanded_states: int = 0
    best_updates: int = 0
    wall_time: float = 0.0
    status: str = "solved"


def exhaustive_dfs(instance: Instance, time_limit: float | None = None) -> tuple[PathResult, SolverStats]:
    """Enumerate every simple path from the source, keeping the heaviest one ending at the target.

    Vertices are unmarked on backtracking; the search does not stop at the
    target, so ``expanded_states`` counts all simple paths leaving the source.
    """
    return _dfs(instance, time_limit, bounded=False)


def dfbnb(instance: Instance, time_limit: float | None = None) -> tuple[PathResult, SolverStats]:
    """Depth-first branch and bound.

    A branch at vertex ``v`` is cut when the target is unreachable through
    unvisited vertices, or when its weight plus the total weight of all edges
    inside ``{v} + reachable unvisited vertices`` cannot beat the incumbent.
    """
    return _dfs(instance, time_limit, bounded=True)


def _dfs(instance: Instance, time_limit: float | None, bounded: bool) -> tuple[PathResult, SolverStats]:
    g = instance.graph
    s, t = instance.source, instance.target
    n = g.vertex_count
    adj = g.adjacency
    stats = SolverStats()
    start = time.perf_counter()
    deadline = None if time_limit is None else start + time_limit
    marked = bytearray(n)
    best = -1.0
    best_path: list[int] | None = None

    def finish(status: str):
        stats.wall_time = time.perf_counter() - start
        stats.status = status

    marked[s] = 1
    stats.expanded_states = 1
    if s == t:
        best, best_path = 0.0, [s]
        stats.best_updates = 1
        if bounded:
            finish("solved")
            return PathResult((s,), 0.0), stats

    path = [s]
    idx = [0]
    acc = [0.0]
    expanded = 1
    while path:
        v = path[-1]
        i = idx[-1]
        row = adj[v]
        if i == len(row):
            marked[v] = 0
            path.pop()
            idx.pop()
            acc.pop()
            continue
        idx[-1] = i + 1
        u, w = row[i]
        if marked[u]:
            continue
        nw = acc[-1] + w
        if bounded and u != t and not _promising(adj, marked, u, t, nw, best):
            continue
        expanded += 1
        if deadline is not None and not expanded & 1023 and time.perf_counter() > deadline:
            stats.expanded_states = expanded
            finish("timeout")
            inc = PathResult(tuple(best_path), best) if best_path else None
            raise SolverTimeout(stats=stats, incumbent=inc)
        if u == t and nw > best:
            best = nw
            best_path = path + [u]
            stats.best_updates += 1
        if bounded and u == t:
            continue
        marked[u] = 1
        path.append(u)
        idx.append(0)
        acc.append(nw)
    stats.expanded_states = expanded
    finish("solved")
    if best_path is None:
        raise NoPathError(f"no path between {s} and {t}")
    return PathResult(tuple(best_path), best), stats


def _promising(adj, marked, u: int, t: int, weight: float, best: float) -> bool:
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for y, _ in adj[x]:
            if not marked[y] and y not in seen:
                seen.add(y)
                stack.append(y)
    if t not in seen:
        return False
    if best < 0:
        return True
    bound = sum(w for x in seen for y, w in adj[x] if x < y and y in seen)
    return weight + bound > best
