"""Hierarchical partitions: construction, import/export and block boundaries.

Level 0 is the finest partition; every block of level ``l`` lies inside one
block of level ``l + 1``; the top level is a single block holding all
vertices.
"""

from __future__ import annotations

import heapq
import io
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .graph import Graph, GraphFormatError, Instance


@dataclass(frozen=True)
class PartitionConfig:
    epsilon: float = 0.1
    target_block_size: int = 16
    max_levels: int = 32
    seed: int = 0
    fanout: int = 2
    trials: int = 16

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.target_block_size < 1:
            raise ValueError("target_block_size must be >= 1")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        if self.fanout < 2 or self.fanout > 8 or self.fanout & (self.fanout - 1):
            raise ValueError("fanout must be 2, 4 or 8")


class PartitionHierarchy:
    """Nested block assignments, ``levels[0]`` finest, ``levels[-1]`` all zeros."""

    def __init__(self, levels: Sequence[Sequence[int]]):
        if not levels:
            raise ValueError("hierarchy needs at least one level")
        arrs = [np.asarray(lv, dtype=np.int64) for lv in levels]
        n = len(arrs[0])
        for li, a in enumerate(arrs):
            if a.ndim != 1 or len(a) != n:
                raise ValueError(f"level {li} has {a.size} entries, expected {n}")
            if n and (a.min() < 0 or set(np.unique(a).tolist()) != set(range(int(a.max()) + 1))):
                raise ValueError(f"level {li}: block ids must be contiguous from 0")
        for li in range(len(arrs) - 1):
            parent = {}
            for b, p in zip(arrs[li].tolist(), arrs[li + 1].tolist()):
                if parent.setdefault(b, p) != p:
                    raise ValueError(f"nesting violated: level-{li} block {b} is split by level {li + 1}")
        if n and arrs[-1].max() != 0:
            raise ValueError("top level must be a single block")
        for a in arrs:
            a.setflags(write=False)
        self.levels = tuple(arrs)
        self._members = [self._group(a) for a in arrs]

    @staticmethod
    def _group(a: np.ndarray) -> list[list[int]]:
        k = int(a.max()) + 1 if len(a) else 0
        groups: list[list[int]] = [[] for _ in range(k)]
        for v, b in enumerate(a.tolist()):
            groups[b].append(v)
        return groups

    @property
    def level_count(self) -> int:
        return len(self.levels)

    @property
    def vertex_count(self) -> int:
        return len(self.levels[0])

    def block_count(self, level: int) -> int:
        return len(self._members[level])

    def members(self, level: int, block: int) -> list[int]:
        return self._members[level][block]

    def parent(self, level: int, block: int) -> int:
        return int(self.levels[level + 1][self._members[level][block][0]])

    def children(self, level: int, block: int) -> list[int]:
        """Level ``level - 1`` blocks inside ``block``, ascending."""
        below = self.levels[level - 1]
        return sorted({int(below[v]) for v in self._members[level][block]})

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, PartitionHierarchy) and len(self.levels) == len(other.levels)
                and all(np.array_equal(a, b) for a, b in zip(self.levels, other.levels)))

    def __repr__(self) -> str:
        sizes = [self.block_count(li) for li in range(self.level_count)]
        return f"PartitionHierarchy(n={self.vertex_count}, blocks per level={sizes})"


def boundary_nodes(graph: Graph, hierarchy: PartitionHierarchy, level: int, block: int,
                   instance: Instance | None = None) -> list[int]:
    """Vertices of the block that are a terminal or have a neighbor outside it."""
    assign = hierarchy.levels[level]
    terminals = (instance.source, instance.target) if instance is not None else ()
    out = []
    for v in hierarchy.members(level, block):
        if v in terminals or any(assign[u] != block for u, _ in graph.adjacency[v]):
            out.append(v)
    return out


def edge_cut(graph: Graph, assignment: Sequence[int]) -> int:
    return sum(1 for u, v, _ in graph.edges() if assignment[u] != assignment[v])


# --- hierarchy file format -------------------------------------------------

def dump_hierarchy(hierarchy: PartitionHierarchy, stream: TextIO | None = None) -> str:
    text = "".join(" ".join(map(str, lv.tolist())) + "\n" for lv in hierarchy.levels)
    if stream is not None:
        stream.write(text)
    return text


def import_hierarchy(stream: TextIO | str, graph: Graph) -> PartitionHierarchy:
    """Read one line of block ids per level, finest first; a single-block top is appended if missing."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    levels = []
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        try:
            ids = [int(tok) for tok in s.split()]
        except ValueError:
            raise GraphFormatError("block ids must be integers", lineno) from None
        if len(ids) != graph.vertex_count:
            raise GraphFormatError(f"{len(ids)} block ids for {graph.vertex_count} vertices", lineno)
        if ids and (min(ids) < 0 or set(ids) != set(range(max(ids) + 1))):
            raise GraphFormatError("block ids must be contiguous from 0", lineno)
        levels.append(ids)
    if not levels:
        raise GraphFormatError("hierarchy file has no levels", None)
    if graph.vertex_count and max(levels[-1]) != 0:
        levels.append([0] * graph.vertex_count)
    try:
        return PartitionHierarchy(levels)
    except ValueError as exc:
        raise GraphFormatError(str(exc), None) from None


# --- construction ----------------------------------------------------------

def build_hierarchy(graph: Graph, config: PartitionConfig | None = None) -> PartitionHierarchy:
    """Recursive bisection into a uniform-depth tree, then one level per kept tree depth.

    Each bisection grows a region breadth-first from a peripheral seed and
    refines it with Fiduccia-Mattheyses moves; caps are chosen so that every
    block at tree depth ``d`` has at most ``(1 + eps) * ceil(n / 2**d)`` vertices.
    """
    config = config or PartitionConfig()
    n = graph.vertex_count
    if n == 0:
        return PartitionHierarchy([[]])
    eps = config.epsilon
    depth = 0
    while (_scaled(eps, math.ceil(n / 2 ** depth)) > config.target_block_size
           and math.ceil(n / 2 ** depth) > 1):
        depth += 1
    caps = [0] * (depth + 1)
    caps[depth] = _scaled(eps, math.ceil(n / 2 ** depth))
    for d in range(depth - 1, -1, -1):
        caps[d] = min(_scaled(eps, math.ceil(n / 2 ** d)), 2 * caps[d + 1])

    rng = np.random.default_rng(config.seed)
    code = [0] * n
    parts = [list(range(n))]
    for d in range(depth):
        nxt = []
        for part in parts:
            a, b = _bisect(graph, part, caps[d + 1], eps, config.trials, rng)
            for v in b:
                code[v] |= 1 << (depth - d - 1)
            nxt.extend((a, b))
        parts = nxt

    step = config.fanout.bit_length() - 1
    kept = list(range(depth, -1, -step))
    if kept[-1] != 0:
        kept.append(0)
    if len(kept) > config.max_levels:
        if config.max_levels == 1:
            kept = [0]
        else:
            idx = np.linspace(0, len(kept) - 1, config.max_levels).round().astype(int)
            kept = [kept[i] for i in sorted(set(idx.tolist()))]
    levels = []
    for d in kept:
        labels = [c >> (depth - d) for c in code]
        remap: dict[int, int] = {}
        levels.append([remap.setdefault(x, len(remap)) for x in labels])
    return PartitionHierarchy(levels)


def _scaled(eps: float, size: int) -> int:
    # 1.1 * 10 is 11.000000000000002, 1.15 * 20 is 22.999999999999996
    return math.floor((1 + eps) * size + 1e-9)


def _bisect(graph: Graph, part: list[int], cap: int, eps: float, trials: int,
            rng: np.random.Generator) -> tuple[list[int], list[int]]:
    size = len(part)
    if size <= 1:
        return part, []
    half = math.ceil(size / 2)
    hi = max(half, min(cap, _scaled(eps, half)))
    lo = size - hi
    local = {v: i for i, v in enumerate(part)}
    adj = [[local[u] for u, _ in graph.adjacency[v] if u in local] for v in part]

    best = None
    seeds = [_peripheral(adj, int(rng.integers(size)))]
    seeds += [int(rng.integers(size)) for _ in range(max(0, trials - 1))]
    for seed in seeds:
        side = _grow(adj, seed, half)
        cut = _fm_refine(adj, side, lo, hi)
        if best is None or cut < best[0]:
            best = (cut, side)
    side = best[1]
    a = [part[i] for i in range(size) if side[i] == 0]
    b = [part[i] for i in range(size) if side[i] == 1]
    return a, b


def _peripheral(adj: list[list[int]], start: int) -> int:
    far = start
    for _ in range(2):
        dist = {far: 0}
        queue = deque([far])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        far = max(dist, key=lambda v: (dist[v], -v))
    return far


def _grow(adj: list[list[int]], seed: int, count: int) -> list[int]:
    """Breadth-first region of ``count`` vertices marked 0; the rest 1."""
    size = len(adj)
    side = [1] * size
    taken = 0
    queue = deque([seed])
    queued = bytearray(size)
    queued[seed] = 1
    nxt_root = 0
    while taken < count:
        if not queue:
            while queued[nxt_root]:
                nxt_root += 1
            queued[nxt_root] = 1
            queue.append(nxt_root)
        v = queue.popleft()
        side[v] = 0
        taken += 1
        for u in adj[v]:
            if not queued[u]:
                queued[u] = 1
                queue.append(u)
    return side


def _fm_refine(adj: list[list[int]], side: list[int], lo: int, hi: int, max_passes: int = 8) -> int:
    """Fiduccia-Mattheyses passes with rollback; ``side`` is updated in place.

    Part 0 must end within ``[lo, hi]`` vertices; during a pass it may be off
    by one so that a tightly balanced split can still swap vertices.
    """
    size = len(adj)
    cut = sum(1 for v in range(size) for u in adj[v] if u > v and side[u] != side[v])
    count0 = side.count(0)
    for _ in range(max_passes):
        gain = [sum(1 if side[u] != side[v] else -1 for u in adj[v]) for v in range(size)]
        heaps: list[list[tuple[int, int]]] = [[], []]
        for v in range(size):
            heaps[side[v]].append((-gain[v], v))
        heapq.heapify(heaps[0])
        heapq.heapify(heaps[1])
        locked = bytearray(size)
        moves = []
        cur = best = cut
        best_len = 0
        c0 = count0
        stall = 0
        while stall < 64:
            choice = None
            for s in (0, 1):
                c_after = c0 - 1 if s == 0 else c0 + 1
                if not lo - 1 <= c_after <= hi + 1:
                    continue
                h = heaps[s]
                while h and (locked[h[0][1]] or -h[0][0] != gain[h[0][1]]):
                    heapq.heappop(h)
                if h and (choice is None or -h[0][0] > gain[choice]):
                    choice = h[0][1]
            if choice is None:
                break
            v = choice
            s = side[v]
            heapq.heappop(heaps[s])
            locked[v] = 1
            cur -= gain[v]
            side[v] = 1 - s
            c0 += 1 if s == 1 else -1
            moves.append(v)
            for u in adj[v]:
                gain[u] += 2 if side[u] != side[v] else -2
                if not locked[u]:
                    heapq.heappush(heaps[side[u]], (-gain[u], u))
            gain[v] = -gain[v]
            if cur < best and lo <= c0 <= hi:
                best, best_len, stall = cur, len(moves), 0
            else:
                stall += 1
        for v in moves[best_len:]:
            side[v] = 1 - side[v]
        count0 = side.count(0)
        if best >= cut:
            break
        cut = best
    return cut


def random_hierarchy(n: int, rng: np.random.Generator, max_levels: int = 4) -> PartitionHierarchy:
    """A random valid hierarchy (blocks need not be connected); used for testing."""
    k = int(rng.integers(1, n + 1))
    cur = rng.integers(k, size=n)
    levels = []
    while True:
        uniq = {b: i for i, b in enumerate(dict.fromkeys(cur.tolist()))}
        cur = np.array([uniq[b] for b in cur.tolist()], dtype=np.int64)
        levels.append(cur)
        k = int(cur.max()) + 1
        if k == 1:
            break
        if len(levels) >= max_levels - 1:
            k2 = 1
        else:
            k2 = int(rng.integers(1, k))
        merge = rng.integers(k2, size=k)
        cur = merge[cur]
    return PartitionHierarchy(levels)
