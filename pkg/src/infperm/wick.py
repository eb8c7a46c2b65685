"""Exact expected traces of words in entry-permuted Gaussian matrices.

By Wick's formula ``E tr(G^{s_1} ... G^{s_m})`` is a sum over pairings of
``|A| / N^(m/2 + 1)``, where ``A`` is the set of cyclic index tuples
``(i_1, ..., i_m)`` with ``s_k(i_k, i_{k+1}) = T s_l(i_l, i_{l+1})`` for every
pair ``(k, l)``. This module counts ``A`` exactly.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import SizeLimitError, UndefinedExponentError
from .partitions import PairPartition, enumerate_pair_partitions, is_noncrossing, pairs_cross, restrict
from .perms import EntryPermutation, transpose_table

SEARCH_CAP_M = 8
SEARCH_CAP_N = 8
SYMBOLIC_CAP_M = 12

Handle = Union[str, EntryPermutation]


@dataclass(frozen=True)
class WordSpec:
    """A word of permuted copies of one Gaussian matrix.

    Letters are :class:`EntryPermutation` objects or string handles: ``"id"``,
    ``"T"``, a registry name, or any of these with a trailing ``"*"`` for the
    adjoint (``(G^s)* = G^{T s T}``).
    """

    letters: tuple

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        if not self.letters:
            raise ValueError("a word needs at least one letter")

    @property
    def m(self) -> int:
        return len(self.letters)

    def resolve(self, N: int, registry: Mapping[str, EntryPermutation] | None = None
                ) -> list[EntryPermutation]:
        out = []
        for h in self.letters:
            p = resolve_handle(h, N, registry)
            if p.N != N:
                raise ValueError(f"letter {h!r} has N={p.N}, expected {N}")
            out.append(p)
        return out


def resolve_handle(h: Handle, N: int, registry: Mapping[str, EntryPermutation] | None = None
                   ) -> EntryPermutation:
    """Permutation named by ``h``; registry names shadow the built-in handles."""
    if isinstance(h, EntryPermutation):
        return h
    star = h.endswith("*")
    name = h[:-1] if star else h
    if registry is not None and name in registry:
        base = registry[name]
    elif name in ("id", "1"):
        base = EntryPermutation.identity(N)
    elif name in ("T", "t", "top"):
        base = EntryPermutation.transpose(N)
    else:
        raise KeyError(f"no permutation registered for handle {name!r}")
    return EntryPermutation.transpose_conjugate(base) if star else base


def _as_perms(w, N: int | None, registry=None) -> list[EntryPermutation]:
    if isinstance(w, WordSpec):
        w = w.letters
    w = list(w)
    if N is None:
        Ns = {h.N for h in w if isinstance(h, EntryPermutation)}
        if len(Ns) != 1:
            raise ValueError("N must be given for symbolic words")
        N = Ns.pop()
    perms = [resolve_handle(h, N, registry) for h in w]
    if any(p.N != N for p in perms):
        raise ValueError(f"word mixes permutation sizes; expected N={N}")
    return perms


# -- counting --


def _pair_list(p: PairPartition) -> list[tuple[int, int]]:
    return [(a - 1, b - 1) for a, b in p.pairs()]


def admissible_tuples(p: PairPartition, perms: Sequence[EntryPermutation]) -> np.ndarray:
    """All admissible cyclic index tuples as a ``(count, m)`` array, 0-based.

    Indices are assigned left to right. Whenever one cell of a pair is fully
    assigned, the partner cell is forced (the constraint is a bijection of
    cells), so its two indices are either filled in or checked on the spot.
    """
    m = p.m
    if len(perms) != m:
        raise ValueError(f"word length {len(perms)} != pairing size {m}")
    N = perms[0].N
    if any(q.N != N for q in perms):
        raise ValueError("word mixes permutation sizes")
    tr = transpose_table(N)
    maps = {}
    for a, b in _pair_list(p):
        maps[(a, b)] = perms[b].inverse_table[tr[perms[a].table]]
        maps[(b, a)] = perms[a].inverse_table[tr[perms[b].table]]
    pending = set(maps)
    assigned = [False] * m
    F = np.zeros((1, m), dtype=np.int64)

    def known(c):
        return assigned[c] and assigned[(c + 1) % m]

    while True:
        progress = True
        while progress and len(F):
            progress = False
            for src, dst in sorted(pending):
                if (src, dst) not in pending or not known(src):
                    continue
                pending.discard((src, dst))
                pending.discard((dst, src))
                target = maps[(src, dst)][F[:, src] * N + F[:, (src + 1) % m]]
                vals = {dst: target // N, (dst + 1) % m: target % N}
                mask = np.ones(len(F), dtype=bool)
                for var, val in vals.items():
                    if assigned[var]:
                        mask &= F[:, var] == val
                F = F[mask]
                for var, val in vals.items():
                    if not assigned[var]:
                        F[:, var] = val[mask]
                        assigned[var] = True
                progress = True
        if all(assigned) or not len(F):
            break
        v = assigned.index(False)
        F = np.repeat(F, N, axis=0)
        F[:, v] = np.tile(np.arange(N), len(F) // N)
        assigned[v] = True
    if not all(assigned):
        return np.zeros((0, m), dtype=np.int64)
    return F


def count_admissible_search(p: PairPartition, perms: Sequence[EntryPermutation]) -> int:
    return len(admissible_tuples(p, perms))


def _symbols(perms: Sequence[EntryPermutation]) -> list[str] | None:
    syms = [q.symbol() for q in perms]
    return None if any(s is None for s in syms) else syms


def symbolic_components(p: PairPartition, eps: Sequence[str]) -> int:
    """Number of free indices for a word over ``{id, T}``.

    Equal letters force ``(i_k, i_{k+1}) = (i_{l+1}, i_l)``; different letters
    force ``(i_k, i_{k+1}) = (i_l, i_{l+1})``. The count is ``N**components``.
    """
    m = p.m
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for a, b in _pair_list(p):
        if eps[a] == eps[b]:
            union(a, (b + 1) % m)
            union((a + 1) % m, b)
        else:
            union(a, b)
            union((a + 1) % m, (b + 1) % m)
    return len({find(x) for x in range(m)})


def count_admissible(p: PairPartition, w, N: int | None = None, registry=None,
                     method: str = "auto") -> int:
    """Exact ``|A|`` for pairing ``p`` and word ``w``.

    ``method`` is ``"search"`` (propagating enumeration), ``"symbolic"``
    (closed form for words over identity/transpose) or ``"auto"``.
    """
    perms = _as_perms(w, N, registry)
    if len(perms) != p.m:
        raise ValueError(f"word length {len(perms)} != pairing size {p.m}")
    syms = _symbols(perms)
    if method == "symbolic" or (method == "auto" and syms is not None):
        if syms is None:
            raise ValueError("symbolic counting needs identity/transpose letters")
        return perms[0].N ** symbolic_components(p, syms)
    if method not in ("auto", "search"):
        raise ValueError(f"unknown method {method!r}")
    if p.m > SEARCH_CAP_M or perms[0].N > SEARCH_CAP_N:
        raise SizeLimitError(f"search counting is capped at m <= {SEARCH_CAP_M}, N <= {SEARCH_CAP_N}")
    return count_admissible_search(p, perms)


def count_admissible_restricted(p: PairPartition, w, N: int | None = None,
                                B: Iterable[int] = (), registry=None) -> int:
    """Number of partial tuples ``(i_s, j_s)_{s in B}`` that extend to an admissible tuple."""
    perms = _as_perms(w, N, registry)
    B = sorted(set(B))
    if any(not 1 <= k <= p.m for k in B):
        raise ValueError(f"B={B} not inside [1, {p.m}]")
    F = admissible_tuples(p, perms)
    return _projected_count(F, B)


def _projected_count(F: np.ndarray, B: Sequence[int]) -> int:
    if not len(F):
        return 0
    if not B:
        return 1
    m = F.shape[1]
    cols = []
    for k in B:
        cols.extend((k - 1, k % m))
    return len(np.unique(F[:, cols], axis=0))


def _log_n(count: int, N: int):
    if N == 1:
        return 0
    e = round(math.log(count) / math.log(N))
    if N ** e == count:
        return e
    return math.log(count) / math.log(N)


def _restricted_exponent(count: int, N: int, p: PairPartition, B) -> float:
    if count <= 0:
        raise UndefinedExponentError("restricted admissible set is empty")
    inside, _ = restrict(p, B)
    return _log_n(count, N) - len(set(B)) + Fraction(len(inside), 2) - 1


def exponent_restricted(p: PairPartition, w, N: int | None = None, B: Iterable[int] = (),
                        registry=None):
    """``log_N |A(B)| - |B| + |B^2|_p| / 2 - 1``."""
    B = sorted(set(B))
    count = count_admissible_restricted(p, w, N, B, registry)
    return _restricted_exponent(count, N or _as_perms(w, N, registry)[0].N, p, B)


@dataclass(frozen=True)
class PairingContribution:
    pairing: PairPartition
    admissible_count: int
    v_value: Fraction
    exponent: object  # int when |A| is a power of N, else float; None if |A| = 0
    pairing_class: "PairingClass | None" = None


def v_pi(p: PairPartition, w, N: int | None = None, registry=None) -> Fraction:
    perms = _as_perms(w, N, registry)
    count = count_admissible(p, perms)
    return Fraction(count, perms[0].N ** (p.m // 2 + 1))


def contributions(w, N: int | None = None, registry=None) -> list[PairingContribution]:
    perms = _as_perms(w, N, registry)
    n = perms[0].N
    m = len(perms)
    syms = _symbols(perms)
    out = []
    for p in enumerate_pair_partitions(m, cap=SYMBOLIC_CAP_M if syms else SEARCH_CAP_M):
        c = count_admissible(p, perms)
        scale = m // 2 + 1
        expo = (_log_n(c, n) - scale) if c else None
        cls = classify_pairing(p, syms) if syms else None
        out.append(PairingContribution(p, c, Fraction(c, n ** scale), expo, cls))
    return out


def expected_trace_exact(w, N: int | None = None, registry=None) -> Fraction:
    """``E tr`` of the word as an exact rational; 0 for odd length."""
    perms = _as_perms(w, N, registry)
    if len(perms) % 2:
        return Fraction(0)
    return sum((c.v_value for c in contributions(perms)), Fraction(0))


def expected_trace_naive(perms: Sequence[EntryPermutation]) -> Fraction:
    """Full ``N^m`` scan without propagation; only for small oracle checks."""
    m = len(perms)
    N = perms[0].N
    if m % 2:
        return Fraction(0)
    tr = transpose_table(N)
    idx = np.indices((N,) * m).reshape(m, -1)
    total = 0
    for p in enumerate_pair_partitions(m):
        ok = np.ones(idx.shape[1], dtype=bool)
        for a, b in _pair_list(p):
            ca = idx[a] * N + idx[(a + 1) % m]
            cb = idx[b] * N + idx[(b + 1) % m]
            ok &= perms[a].table[ca] == tr[perms[b].table[cb]]
        total += int(ok.sum())
    return Fraction(total, N ** (m // 2 + 1))


# -- identity/transpose words --


class PairingClass(enum.IntEnum):
    CLASS0 = 0
    CLASS1 = 1
    CLASS2 = 2

    def __str__(self) -> str:
        return f"Class{int(self)}"


def _shift_witness(B_pairs: Sequence[tuple[int, int]]) -> bool:
    pts = sorted(x for pr in B_pairs for x in pr)
    half = len(B_pairs)
    partner = {a: b for a, b in B_pairs}
    partner.update({b: a for a, b in B_pairs})
    return all(partner[pts[s]] == pts[half + s] for s in range(half))


def classify_pairing(p: PairPartition, eps: Sequence) -> PairingClass:
    """Order of ``V`` for an identity/transpose word: 1, 1/N, or smaller.

    Class1 asks for a set ``B`` of mismatched pairs in shift position
    (``p(i(s)) = i(m'+s)``) such that every remaining pair is matched and
    crosses no other pair at all; those remaining pairs then peel off one
    at a time without changing ``V``.
    """
    if len(eps) != p.m:
        raise ValueError(f"word length {len(eps)} != pairing size {p.m}")
    pairs = p.pairs()
    matched = [eps[a - 1] == eps[b - 1] for a, b in pairs]
    if all(matched) and is_noncrossing(p):
        return PairingClass.CLASS0
    free = [
        all(not pairs_cross(pr, other) for other in pairs if other != pr)
        for pr in pairs
    ]
    mismatched = [t for t, ok in enumerate(matched) if not ok]
    for r in range(1, len(mismatched) + 1):
        for chosen in itertools.combinations(mismatched, r):
            rest = [t for t in range(len(pairs)) if t not in chosen]
            if not all(matched[t] and free[t] for t in rest):
                continue
            if _shift_witness([pairs[t] for t in chosen]):
                return PairingClass.CLASS1
    return PairingClass.CLASS2


def asymptotic_trace(eps: Sequence) -> tuple[int, int]:
    """``(phi, phi')`` of an identity/transpose word: sizes of Class0 and Class1."""
    m = len(eps)
    if m % 2:
        return 0, 0
    if m > SYMBOLIC_CAP_M:
        raise SizeLimitError(f"symbolic classification is capped at m <= {SYMBOLIC_CAP_M}")
    counts = [0, 0, 0]
    for p in enumerate_pair_partitions(m, cap=SYMBOLIC_CAP_M):
        counts[classify_pairing(p, eps)] += 1
    return counts[0], counts[1]


def null_infinitesimal_prediction(eps: Sequence) -> list[PairPartition]:
    """Pairings that survive for a uniformly permuted matrix and its adjoint.

    ``eps`` is over ``{1, *}``; survivors are non-crossing with every pair
    joining a plain letter to a starred one.
    """
    m = len(eps)
    if m % 2:
        return []
    return [
        p for p in enumerate_pair_partitions(m, cap=SYMBOLIC_CAP_M)
        if is_noncrossing(p) and all(eps[a - 1] != eps[b - 1] for a, b in p.pairs())
    ]


# -- restricted-exponent audit --


@dataclass(frozen=True)
class Lemma24Violation:
    part: str
    B: tuple[int, ...]
    k: int
    lhs: float
    rhs: float


def audit_restricted_exponents(p: PairPartition, perms: Sequence[EntryPermutation],
                               tol: float = 1e-9) -> list[Lemma24Violation]:
    """Check the monotonicity of ``a(B)`` over every nonempty ``B``.

    (i) adding a cyclic neighbour of a point of ``B`` does not increase
    ``a(B)``, and ``a(B) >= a``; (ii) adding the partner of a point of ``B``
    does not increase it; (iii) adding ``k`` with both neighbours in ``B``
    and ``{k, p(k)}`` outside ``B`` lowers it by at least 1.
    Neighbours wrap around (``0 -> m``, ``m + 1 -> 1``).
    """
    m = p.m
    N = perms[0].N
    F = admissible_tuples(p, perms)
    if not len(F):
        return []
    cache: dict[int, float] = {}

    def a(mask: int) -> float:
        if mask not in cache:
            B = [k for k in range(1, m + 1) if mask >> (k - 1) & 1]
            cache[mask] = float(_restricted_exponent(_projected_count(F, B), N, p, B))
        return cache[mask]

    def bit(k):
        return 1 << (k - 1)

    def nb(k, d):
        return (k - 1 + d) % m + 1

    full = a((1 << m) - 1)
    out = []
    for mask in range(1, 1 << m):
        B = tuple(k for k in range(1, m + 1) if mask & bit(k))
        aB = a(mask)
        if aB < full - tol:
            out.append(Lemma24Violation("i-global", B, 0, aB, full))
        for k in B:
            for k2 in (nb(k, -1), nb(k, 1)):
                v = a(mask | bit(k2))
                if v > aB + tol:
                    out.append(Lemma24Violation("i", B, k2, v, aB))
            v = a(mask | bit(p(k)))
            if v > aB + tol:
                out.append(Lemma24Violation("ii", B, p(k), v, aB))
        for k in range(1, m + 1):
            if mask & (bit(k) | bit(p(k))):
                continue
            if mask & bit(nb(k, -1)) and mask & bit(nb(k, 1)):
                v = a(mask | bit(k))
                if v > aB - 1 + tol:
                    out.append(Lemma24Violation("iii", B, k, v, aB - 1))
    return out


def contributions_csv(w, N: int | None = None, registry=None) -> str:
    """Per-pairing CSV and exact total for the ``wick`` CLI."""
    rows = contributions(w, N, registry)
    buf = io.StringIO()
    buf.write("# schema=v1\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["pairing", "count", "v_numerator", "v_denominator", "class"])
    for c in rows:
        wr.writerow([str(c.pairing), c.admissible_count, c.v_value.numerator,
                     c.v_value.denominator, "" if c.pairing_class is None else str(c.pairing_class)])
    total = sum((c.v_value for c in rows), Fraction(0))
    buf.write(f"# total={total.numerator}/{total.denominator}\n")
    return buf.getvalue()
