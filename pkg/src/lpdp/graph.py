"""Undirected weighted graphs, s-t instances, METIS-style file I/O and path checking.

Vertex ids are 0-based in memory and 1-based in every file format.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO


class GraphFormatError(ValueError):
    """Malformed graph, problem or hierarchy file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PathError(ValueError):
    """A path failed validation against its graph."""


class NoPathError(RuntimeError):
    """Source and target are not connected."""


class Graph:
    """Immutable undirected graph with non-negative edge weights.

    ``adjacency[v]`` is a tuple of ``(neighbor, weight)`` pairs sorted by
    neighbor id.
    """

    __slots__ = ("adjacency", "edge_count", "_weights")

    def __init__(self, adjacency: Sequence[Iterable[tuple[int, float]]]):
        n = len(adjacency)
        weights: list[dict[int, float]] = []
        for v, row in enumerate(adjacency):
            wmap: dict[int, float] = {}
            for u, w in row:
                u = int(u)
                w = float(w)
                if not 0 <= u < n:
                    raise ValueError(f"vertex {v}: neighbor {u} out of range")
                if u == v:
                    raise ValueError(f"self-loop at vertex {v}")
                if not w >= 0 or math.isinf(w):
                    raise ValueError(f"edge ({v}, {u}) has invalid weight {w}")
                if u in wmap:
                    raise ValueError(f"parallel edge ({v}, {u})")
                wmap[u] = w
            weights.append(wmap)
        for v, wmap in enumerate(weights):
            for u, w in wmap.items():
                if weights[u].get(v) != w:
                    raise ValueError(f"asymmetric edge ({v}, {u})")
        self._weights = tuple(weights)
        self.adjacency = tuple(tuple(sorted(wmap.items())) for wmap in weights)
        self.edge_count = sum(len(w) for w in weights) // 2

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float] | tuple[int, int]]) -> "Graph":
        """Build from an edge list; repeated edges keep the maximum weight."""
        rows: list[dict[int, float]] = [{} for _ in range(n)]
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if v in rows[u]:
                warnings.warn(f"parallel edge ({u}, {v}) collapsed to maximum weight", stacklevel=2)
                w = max(w, rows[u][v])
            rows[u][v] = w
            rows[v][u] = w
        return cls([list(r.items()) for r in rows])

    @property
    def vertex_count(self) -> int:
        return len(self.adjacency)

    def __len__(self) -> int:
        return len(self.adjacency)

    def neighbors(self, v: int) -> tuple[tuple[int, float], ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._weights[u]

    def weight(self, u: int, v: int) -> float:
        """Weight of edge {u, v}; KeyError if absent."""
        return self._weights[u][v]

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Each undirected edge once, as ``(u, v, w)`` with ``u < v``."""
        for u, row in enumerate(self.adjacency):
            for v, w in row:
                if u < v:
                    yield u, v, w

    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges())

    def induced_subgraph(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Subgraph induced by ``vertices``; returns it with the new-to-old id map."""
        old = sorted(set(vertices))
        new_id = {v: i for i, v in enumerate(old)}
        rows = [[(new_id[u], w) for u, w in self.adjacency[v] if u in new_id] for v in old]
        return Graph(rows), old

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by smallest vertex."""
        seen = bytearray(len(self))
        comps = []
        for root in range(len(self)):
            if seen[root]:
                continue
            seen[root] = 1
            comp = [root]
            stack = [root]
            while stack:
                v = stack.pop()
                for u, _ in self.adjacency[v]:
                    if not seen[u]:
                        seen[u] = 1
                        comp.append(u)
                        stack.append(u)
            comps.append(sorted(comp))
        return comps

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.adjacency == other.adjacency

    def __hash__(self) -> int:
        return hash(self.adjacency)

    def __repr__(self) -> str:
        return f"Graph(n={self.vertex_count}, m={self.edge_count})"


@dataclass(frozen=True)
class Instance:
    """A longest-path query: find the heaviest simple source-target path."""

    graph: Graph
    source: int
    target: int

    def __post_init__(self):
        n = self.graph.vertex_count
        if not (0 <= self.source < n and 0 <= self.target < n):
            raise ValueError(f"terminals ({self.source}, {self.target}) out of range for n={n}")
        if self.source == self.target and n != 1:
            raise ValueError("source and target must differ")


@dataclass(frozen=True)
class PathResult:
    vertices: tuple[int, ...]
    weight: float

    def __len__(self) -> int:
        return len(self.vertices)


def _content_lines(stream: TextIO) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        if line.lstrip().startswith("%"):
            continue
        yield lineno, line.rstrip("\r\n")


def _number(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise GraphFormatError(f"not a number: {token!r}", lineno) from None


def load_graph(stream: TextIO | str) -> Graph:
    """Parse a METIS-style graph.

    The header is ``n m [fmt]`` with fmt 1 meaning edge weights follow each
    neighbor id. Line ``i + 1`` lists the neighbors of vertex ``i`` (1-based).
    Parallel edges collapse to the heaviest one with a warning.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = _content_lines(stream)
    header = None
    for lineno, line in lines:
        if line.strip():
            header = (lineno, line.split())
            break
    if header is None:
        raise GraphFormatError("missing header", 1)
    hline, tokens = header
    if len(tokens) not in (2, 3):
        raise GraphFormatError("header must be 'n m [fmt]'", hline)
    try:
        n, m = int(tokens[0]), int(tokens[1])
        fmt = int(tokens[2]) if len(tokens) == 3 else 0
    except ValueError:
        raise GraphFormatError("header fields must be integers", hline) from None
    if n < 0 or m < 0:
        raise GraphFormatError("negative size in header", hline)
    if fmt not in (0, 1):
        raise GraphFormatError(f"unsupported fmt {tokens[2]!r}; only 0 and 1", hline)

    rows: list[dict[int, float]] = []
    line_of: list[int] = []
    entries = 0
    for lineno, line in lines:
        if len(rows) == n:
            if line.strip():
                raise GraphFormatError("more vertex lines than declared", lineno)
            continue
        tokens = line.split()
        if fmt == 1 and len(tokens) % 2:
            raise GraphFormatError("odd token count in weighted adjacency line", lineno)
        v = len(rows)
        row: dict[int, float] = {}
        step = 2 if fmt == 1 else 1
        for i in range(0, len(tokens), step):
            u = _number(tokens[i], lineno)
            if u != int(u) or not 1 <= u <= n:
                raise GraphFormatError(f"neighbor id {tokens[i]} out of range 1..{n}", lineno)
            u = int(u) - 1
            w = _number(tokens[i + 1], lineno) if fmt == 1 else 1.0
            if w < 0:
                raise GraphFormatError(f"negative weight {tokens[i + 1]}", lineno)
            if not math.isfinite(w):
                raise GraphFormatError(f"non-finite weight {tokens[i + 1]}", lineno)
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {v + 1}", lineno)
            entries += 1
            if u in row:
                warnings.warn(f"line {lineno}: parallel edge ({v + 1}, {u + 1}) collapsed to maximum weight",
                              stacklevel=2)
                w = max(w, row[u])
            row[u] = w
        rows.append(row)
        line_of.append(lineno)
    if len(rows) < n:
        raise GraphFormatError(f"expected {n} vertex lines, found {len(rows)}", None)
    if entries != 2 * m:
        raise GraphFormatError(f"header declares {m} edges ({2 * m} adjacency entries) but the lists hold {entries}", hline)
    for v, row in enumerate(rows):
        for u, w in row.items():
            back = rows[u].get(v)
            if back is None:
                raise GraphFormatError(f"asymmetric edge: vertex {v + 1} lists {u + 1} but not vice versa",
                                       line_of[v])
            if back != w:
                raise GraphFormatError(f"asymmetric weight on edge ({v + 1}, {u + 1}): {w:g} vs {back:g}",
                                       line_of[v])
    return Graph([list(r.items()) for r in rows])


def _fmt_weight(w: float) -> str:
    return str(int(w)) if w == int(w) else repr(w)


def dump_graph(graph: Graph, stream: TextIO | None = None, weighted: bool | None = None) -> str:
    """Serialize ``graph``; returns the text and also writes it to ``stream`` if given."""
    if weighted is None:
        weighted = any(w != 1.0 for _, _, w in graph.edges())
    out = [f"{graph.vertex_count} {graph.edge_count} {int(weighted)}"]
    for row in graph.adjacency:
        if weighted:
            out.append(" ".join(f"{u + 1} {_fmt_weight(w)}" for u, w in row))
        else:
            out.append(" ".join(str(u + 1) for u, _ in row))
    text = "\n".join(out) + "\n"
    if stream is not None:
        stream.write(text)
    return text


def load_problem(stream: TextIO | str, graph: Graph) -> Instance:
    """Read a sidecar problem file holding ``s t`` (1-based)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for lineno, line in _content_lines(stream):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 2:
            raise GraphFormatError("problem line must be 's t'", lineno)
        try:
            s, t = int(tokens[0]) - 1, int(tokens[1]) - 1
        except ValueError:
            raise GraphFormatError("terminals must be integers", lineno) from None
        try:
            return Instance(graph, s, t)
        except ValueError as exc:
            raise GraphFormatError(str(exc), lineno) from None
    raise GraphFormatError("empty problem file", None)


def dump_problem(instance: Instance, stream: TextIO | None = None) -> str:
    text = f"{instance.source + 1} {instance.target + 1}\n"
    if stream is not None:
        stream.write(text)
    return text


def add_universal_endpoints(graph: Graph) -> Instance:
    """Reduce overall-longest-path to an s-t query.

    Two fresh vertices ``s = n`` and ``t = n + 1`` are joined to every original
    vertex by zero-weight edges.
    """
    n = graph.vertex_count
    if n == 0:
        raise ValueError("graph is empty")
    rows = [list(row) for row in graph.adjacency]
    s, t = n, n + 1
    for v in range(n):
        rows[v] += [(s, 0.0), (t, 0.0)]
    rows.append([(v, 0.0) for v in range(n)])
    rows.append([(v, 0.0) for v in range(n)])
    return Instance(Graph(rows), s, t)


def path_weight(graph: Graph, vertices: Sequence[int]) -> float:
    return sum(graph.weight(a, b) for a, b in zip(vertices, vertices[1:]))


def validate_path(graph: Graph, path: PathResult, s: int, t: int) -> float:
    """Check that ``path`` is a simple s-t path of ``graph`` with the stated weight.

    Returns the recomputed weight; raises :class:`PathError` otherwise.
    """
    vs = path.vertices
    if not vs:
        raise PathError("empty path")
    if vs[0] != s or vs[-1] != t:
        raise PathError(f"path runs {vs[0]}..{vs[-1]}, expected {s}..{t}")
    if len(set(vs)) != len(vs):
        raise PathError("path repeats a vertex")
    bad = [v for v in vs if not 0 <= v < graph.vertex_count]
    if bad:
        raise PathError(f"vertex {bad[0]} not in graph")
    total = 0.0
    for a, b in zip(vs, vs[1:]):
        if not graph.has_edge(a, b):
            raise PathError(f"missing edge ({a}, {b})")
        total += graph.weight(a, b)
    if not math.isclose(total, path.weight, rel_tol=1e-9, abs_tol=1e-9):
        raise PathError(f"stated weight {path.weight} but edges sum to {total}")
    return total
