"""Pair partitions P2(m) and non-crossing partitions NC(n).

Positions are 1-based throughout. Enumerations come back in a fixed
canonical order so that tables derived from them are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import SizeLimitError

PAIR_CAP = 12
NC_CAP = 10


@dataclass(frozen=True)
class PairPartition:
    """A perfect matching of [m], stored as a fixed-point-free involution.

    ``partner[k - 1]`` is the position paired with ``k``.
    """

    partner: tuple[int, ...]

    def __post_init__(self):
        partner = tuple(int(x) for x in self.partner)
        object.__setattr__(self, "partner", partner)
        m = len(partner)
        if m == 0 or m % 2:
            raise ValueError(f"pair partition needs an even positive size, got {m}")
        for k, l in enumerate(partner, start=1):
            if not 1 <= l <= m:
                raise ValueError(f"partner of {k} out of range: {l}")
            if l == k:
                raise ValueError(f"{k} is a fixed point")
            if partner[l - 1] != k:
                raise ValueError(f"not an involution at {k} -> {l}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "PairPartition":
        pairs = list(pairs)
        m = 2 * len(pairs)
        partner = [0] * m
        for a, b in pairs:
            if not (1 <= a <= m and 1 <= b <= m):
                raise ValueError(f"pair {(a, b)} out of range for m={m}")
            if partner[a - 1] or partner[b - 1]:
                raise ValueError(f"position repeated in {pairs}")
            partner[a - 1] = b
            partner[b - 1] = a
        return cls(tuple(partner))

    @property
    def m(self) -> int:
        return len(self.partner)

    def __call__(self, k: int) -> int:
        return self.partner[k - 1]

    def pairs(self) -> list[tuple[int, int]]:
        """Blocks as ``(a, b)`` with ``a < b``, sorted by ``a``."""
        return [(k, l) for k, l in enumerate(self.partner, start=1) if k < l]

    def __str__(self) -> str:
        return "".join(f"({a},{b})" for a, b in self.pairs())


def _pairings(points: tuple[int, ...]) -> Iterator[list[tuple[int, int]]]:
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    for idx, other in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1:]
        for tail in _pairings(remaining):
            yield [(first, other)] + tail


def enumerate_pair_partitions(m: int, cap: int = PAIR_CAP) -> list[PairPartition]:
    """All perfect matchings of [m], lexicographic by partner array.

    Odd ``m`` gives the empty list.
    """
    if m > cap:
        raise SizeLimitError(f"m={m} exceeds the pair-partition cap {cap}")
    if m < 2 or m % 2:
        return []
    return list(_pair_partitions_cached(m))


@lru_cache(maxsize=None)
def _pair_partitions_cached(m: int) -> tuple[PairPartition, ...]:
    out = [PairPartition.from_pairs(ps) for ps in _pairings(tuple(range(1, m + 1)))]
    out.sort(key=lambda p: p.partner)
    return tuple(out)


def is_noncrossing(p: PairPartition) -> bool:
    """True iff there are no a < b < c < d with p(a) = c and p(b) = d."""
    stack: list[int] = []
    for k in range(1, p.m + 1):
        l = p(k)
        if l > k:
            stack.append(k)
        elif not stack or stack.pop() != l:
            return False
    return True


def pairs_cross(first: tuple[int, int], second: tuple[int, int]) -> bool:
    """Whether two chords ``(a, b)``, ``(c, d)`` interleave."""
    a, b = sorted(first)
    c, d = sorted(second)
    return a < c < b < d or c < a < d < b


@dataclass(frozen=True)
class NcPartition:
    """A non-crossing set partition of [n]."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(x) for x in b)) for b in self.blocks))
        object.__setattr__(self, "blocks", blocks)
        seen = sorted(x for b in blocks for x in b)
        if self.n < 1 or seen != list(range(1, self.n + 1)) or any(not b for b in blocks):
            raise ValueError(f"blocks {blocks} do not partition [{self.n}]")
        for i, b1 in enumerate(blocks):
            for b2 in blocks[i + 1:]:
                if _blocks_cross(b1, b2):
                    raise ValueError(f"blocks {b1} and {b2} cross")

    def __len__(self) -> int:
        return len(self.blocks)

    def is_full(self) -> bool:
        return len(self.blocks) == 1

    def __str__(self) -> str:
        return "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)


def _blocks_cross(b1: Sequence[int], b2: Sequence[int]) -> bool:
    for a in b1:
        for c in b1:
            if c <= a:
                continue
            inside = [x for x in b2 if a < x < c]
            if inside and len(inside) < len(b2):
                return True
    return False


def _nc_blocks(points: tuple[int, ...]) -> Iterator[list[tuple[int, ...]]]:
    # the block of the first point splits the rest into independent gaps
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    n = len(rest)
    for mask in range(1 << n):
        chosen = [i for i in range(n) if mask >> i & 1]
        block = (first,) + tuple(rest[i] for i in chosen)
        cuts = [-1] + chosen + [n]
        gaps = [rest[cuts[t] + 1:cuts[t + 1]] for t in range(len(cuts) - 1)]
        yield from _combine_gaps(block, gaps)


def _combine_gaps(block, gaps) -> Iterator[list[tuple[int, ...]]]:
    if not gaps:
        yield [block]
        return
    for head in _nc_blocks(gaps[0]):
        for tail in _combine_gaps(block, gaps[1:]):
            yield head + tail


def _rgs(p: NcPartition) -> tuple[int, ...]:
    label = [0] * p.n
    for idx, b in enumerate(p.blocks):
        for x in b:
            label[x - 1] = idx
    return tuple(label)


@lru_cache(maxsize=None)
def _nc_cached(n: int) -> tuple[NcPartition, ...]:
    out = [NcPartition(n, tuple(bs)) for bs in _nc_blocks(tuple(range(1, n + 1)))]
    out.sort(key=_rgs)
    return tuple(out)


def enumerate_nc(n: int, cap: int = NC_CAP) -> list[NcPartition]:
    """All non-crossing partitions of [n], ordered by restricted growth string."""
    if n > cap:
        raise SizeLimitError(f"n={n} exceeds the NC cap {cap}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return list(_nc_cached(n))


def restrict(p: PairPartition, B: Iterable[int]):
    """Split ``B`` against ``p``.

    Returns ``(inside, leaving)`` where ``inside`` is the set of ordered
    pairs ``(k, l)`` in ``B x B`` with ``p(k) = l`` and ``leaving`` the
    positions of ``B`` whose partner lies outside ``B``.
    """
    B = set(B)
    for k in B:
        if not 1 <= k <= p.m:
            raise ValueError(f"index {k} outside [1, {p.m}]")
    inside = frozenset((k, p(k)) for k in B if p(k) in B)
    leaving = frozenset(k for k in B if p(k) not in B)
    return inside, leaving
