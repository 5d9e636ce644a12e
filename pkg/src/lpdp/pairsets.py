"""Boundary pair sets: the dynamic-programming state of a block.

A pair set lists the endpoint pairs of vertex-disjoint paths inside a block.
Pairs ``(a, b)`` with ``a < b`` form a matching; pairs ``(a, a)`` are
zero-length paths. Inside solution tables a pair set is packed into an
integer key: boundary position ``i`` owns a field of ``width`` bits holding
``partner_position + 1`` (its own position + 1 for a singleton, 0 if unused).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, Iterator, Sequence

MAX_COUNT_N = 20
MAX_ENUMERATE_N = 12


@dataclass(frozen=True)
class BoundaryPairSet:
    pairs: tuple[tuple[int, int], ...] = ()

    @property
    def matching(self) -> tuple[tuple[int, int], ...]:
        return tuple(p for p in self.pairs if p[0] != p[1])

    @property
    def singletons(self) -> tuple[int, ...]:
        return tuple(p[0] for p in self.pairs if p[0] == p[1])

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(v for p in self.pairs for v in p)

    def is_trivial(self) -> bool:
        """True when no proper pair is present; such sets always have weight 0."""
        return all(a == b for a, b in self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{{{a},{b}}}" for a, b in self.pairs) + "}"


class _Unsolvable:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNSOLVABLE"

    def __bool__(self) -> bool:
        return False


UNSOLVABLE = _Unsolvable()


def canonicalize(raw: Iterable[Sequence[int]]) -> BoundaryPairSet | _Unsolvable:
    """Sort each pair and the pair list; UNSOLVABLE if any vertex appears twice."""
    pairs = []
    seen: set[int] = set()
    for a, b in raw:
        a, b = (a, b) if a <= b else (b, a)
        ends = {a, b}
        if ends & seen:
            return UNSOLVABLE
        seen |= ends
        pairs.append((a, b))
    return BoundaryPairSet(tuple(sorted(pairs)))


def telephone_number(n: int) -> int:
    """Number of matchings in the complete graph on ``n`` vertices."""
    _guard(n)
    return sum(factorial(n) // (2 ** k * factorial(n - 2 * k) * factorial(k)) for k in range(n // 2 + 1))


def solvable_upper_bound(n: int) -> int:
    """Count of pair sets over ``n`` boundary nodes (exact when the block is a clique).

    Each ``k``-edge matching leaves ``n - 2k`` nodes that are each a singleton or unused.
    """
    _guard(n)
    return sum(factorial(n) // (2 ** k * factorial(n - 2 * k) * factorial(k)) * 2 ** (n - 2 * k)
               for k in range(n // 2 + 1))


def _guard(n: int) -> None:
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_COUNT_N:
        raise OverflowError(f"counting is only supported for n <= {MAX_COUNT_N}")


def enumerate_pair_sets(boundary: Iterable[int]) -> Iterator[BoundaryPairSet]:
    """Yield every canonical pair set over ``boundary`` exactly once."""
    verts = sorted(set(boundary))
    if len(verts) > MAX_ENUMERATE_N:
        raise ValueError(f"enumeration limited to {MAX_ENUMERATE_N} boundary nodes")

    def rec(rest: list[int], acc: list[tuple[int, int]]):
        if not rest:
            # pairs are appended in increasing order of their first node
            yield BoundaryPairSet(tuple(acc))
            return
        v, tail = rest[0], rest[1:]
        yield from rec(tail, acc)
        acc.append((v, v))
        yield from rec(tail, acc)
        acc.pop()
        for i, w in enumerate(tail):
            acc.append((v, w))
            yield from rec(tail[:i] + tail[i + 1:], acc)
            acc.pop()

    yield from rec(verts, [])


def key_width(boundary_size: int) -> int:
    return max(8, boundary_size.bit_length())


def encode(pairs: Iterable[Sequence[int]], position: dict[int, int], width: int = 8) -> int:
    """Pack a pair set into its integer table key (positions index the boundary list)."""
    key = 0
    for a, b in pairs:
        pa, pb = position[a], position[b]
        key |= (pb + 1) << (width * pa)
        key |= (pa + 1) << (width * pb)
    return key


def decode(key: int, boundary: Sequence[int], width: int = 8) -> BoundaryPairSet:
    mask = (1 << width) - 1
    pairs = []
    i = 0
    while key:
        partner = (key & mask) - 1
        if partner >= i:
            pairs.append((boundary[i], boundary[partner]))
        key >>= width
        i += 1
    return BoundaryPairSet(tuple(sorted(pairs)))


def has_proper_pair(key: int, width: int = 8) -> bool:
    mask = (1 << width) - 1
    i = 0
    while key:
        if (key & mask) and (key & mask) - 1 != i:
            return True
        key >>= width
        i += 1
    return False
