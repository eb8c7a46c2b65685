"""Permutations of the cells of an N x N matrix and their coincidence counts.

The public API uses 1-based ``(i, j)`` cells. Internally a cell is a flat
0-based index ``(i - 1) * N + (j - 1)`` and a permutation is an integer array
mapping flat index to flat index, which lets the statistics run as vectorised
scans.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

PRNG_NAME = "philox4x64-10"
PRNG_VERSION = "philox4x64-10/fisher-yates/lemire-v1"

# 0-based vectorised cell map: (rows, cols) -> (rows', cols')
CellMap = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def transpose_table(N: int) -> np.ndarray:
    f = np.arange(N * N, dtype=np.int64)
    return (f % N) * N + f // N


class EntryPermutation:
    """A bijection of [N]^2.

    Build with :meth:`identity`, :meth:`transpose`, :meth:`explicit` or
    :meth:`transpose_conjugate`; the last realises ``T o sigma o T``.
    """

    KINDS = ("identity", "transpose", "explicit", "transpose_conjugate")

    def __init__(self, N: int, kind: str, table: np.ndarray | None = None,
                 inner: "EntryPermutation | None" = None, label: str | None = None):
        if N < 1:
            raise ValueError(f"N must be positive, got {N}")
        if kind not in self.KINDS:
            raise ValueError(f"unknown permutation kind {kind!r}")
        self.N = int(N)
        self.kind = kind
        self.inner = inner
        self.label = label
        self._table = None
        if kind == "explicit":
            table = np.asarray(table, dtype=np.int64).reshape(-1)
            if table.shape != (N * N,):
                raise ValueError(f"explicit table must have {N * N} entries, got {table.size}")
            if not np.array_equal(np.sort(table), np.arange(N * N)):
                raise ValueError("explicit table is not a bijection of the N^2 cells")
            table.flags.writeable = False
            self._table = table
        elif kind == "transpose_conjugate":
            if inner is None or inner.N != N:
                raise ValueError("transpose_conjugate needs an inner permutation of the same N")

    @classmethod
    def identity(cls, N: int) -> "EntryPermutation":
        return cls(N, "identity", label="id")

    @classmethod
    def transpose(cls, N: int) -> "EntryPermutation":
        return cls(N, "transpose", label="T")

    @classmethod
    def explicit(cls, table, label: str | None = None) -> "EntryPermutation":
        table = np.asarray(table, dtype=np.int64).reshape(-1)
        N = int(round(np.sqrt(table.size)))
        if N * N != table.size:
            raise ValueError(f"table size {table.size} is not a square")
        return cls(N, "explicit", table=table, label=label)

    @classmethod
    def transpose_conjugate(cls, inner: "EntryPermutation") -> "EntryPermutation":
        label = f"T{inner.label}T" if inner.label else None
        return cls(inner.N, "transpose_conjugate", inner=inner, label=label)

    @cached_property
    def table(self) -> np.ndarray:
        """Flat 0-based image of every cell, row-major."""
        N = self.N
        if self.kind == "identity":
            t = np.arange(N * N, dtype=np.int64)
        elif self.kind == "transpose":
            t = transpose_table(N)
        elif self.kind == "explicit":
            return self._table
        else:
            tr = transpose_table(N)
            t = tr[self.inner.table[tr]]
        t.flags.writeable = False
        return t

    @cached_property
    def inverse_table(self) -> np.ndarray:
        inv = np.empty_like(self.table)
        inv[self.table] = np.arange(self.N * self.N, dtype=np.int64)
        inv.flags.writeable = False
        return inv

    def _check(self, i: int, j: int) -> None:
        if not (1 <= i <= self.N and 1 <= j <= self.N):
            raise ValueError(f"cell ({i}, {j}) outside [1, {self.N}]^2")

    def apply(self, i: int, j: int) -> tuple[int, int]:
        self._check(i, j)
        f = int(self.table[(i - 1) * self.N + (j - 1)])
        return f // self.N + 1, f % self.N + 1

    def apply_inverse(self, i: int, j: int) -> tuple[int, int]:
        self._check(i, j)
        f = int(self.inverse_table[(i - 1) * self.N + (j - 1)])
        return f // self.N + 1, f % self.N + 1

    def is_symbolic(self) -> bool:
        """Whether the action is the identity or the transpose."""
        return self.symbol() is not None

    def symbol(self) -> str | None:
        if self.kind in ("identity", "transpose"):
            return "id" if self.kind == "identity" else "T"
        if self.kind == "transpose_conjugate":
            return self.inner.symbol()
        return None

    def same_action(self, other: "EntryPermutation") -> bool:
        return self.N == other.N and np.array_equal(self.table, other.table)

    def __repr__(self) -> str:
        name = self.label or self.kind
        return f"EntryPermutation({name}, N={self.N})"

    # -- serialisation: row-major, 0-based flat targets --

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "table": self.table.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "EntryPermutation":
        doc = json.loads(text)
        p = cls.explicit(doc["table"])
        if p.N != doc["N"]:
            raise ValueError("N does not match the table size")
        return p

    def to_bytes(self) -> bytes:
        return self.table.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EntryPermutation":
        return cls.explicit(np.frombuffer(data, dtype="<u4").astype(np.int64))


class RawStream:
    """Buffered 64-bit words from a keyed Philox generator."""

    def __init__(self, seed: int, stream: int = 0, chunk: int = 4096):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be non-negative")
        key = (int(stream) << 64) | (int(seed) & (2**64 - 1))
        self._bg = np.random.Philox(key=key)
        self._chunk = chunk
        self._buf: list[int] = []
        self._pos = 0

    def next(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._bg.random_raw(self._chunk).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by Lemire's multiply-and-reject."""
        x = self.next() * bound
        low = x & 0xFFFFFFFFFFFFFFFF
        if low < bound:
            threshold = (2**64 - bound) % bound
            while low < threshold:
                x = self.next() * bound
                low = x & 0xFFFFFFFFFFFFFFFF
        return x >> 64


def sample_uniform(N: int, seed: int, stream: int = 0) -> EntryPermutation:
    """Uniform random bijection of [N]^2 via Fisher-Yates over row-major cells.

    The draw depends only on ``(N, seed, stream)`` and the algorithm recorded
    in ``PRNG_VERSION``.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    rs = RawStream(seed, stream)
    a = list(range(N * N))
    for i in range(N * N - 1, 0, -1):
        j = rs.below(i + 1)
        a[i], a[j] = a[j], a[i]
    return EntryPermutation.explicit(a, label=f"sigma[{seed}]")


# -- statistics --


@dataclass(frozen=True)
class StatReport:
    kind: str
    N: int
    raw: int
    exponent: Fraction
    seed: int | None = None
    info: dict | None = field(default=None, compare=False)

    @property
    def normalized(self) -> float:
        return self.raw / self.N ** float(self.exponent)

    def csv_row(self) -> list:
        return [self.kind, self.N, "" if self.seed is None else self.seed, self.raw,
                str(self.exponent), repr(self.normalized)]


STAT_CSV_HEADER = ["kind", "N", "seed", "raw", "exponent", "normalized"]


def stats_to_csv(reports: Sequence[StatReport]) -> str:
    buf = io.StringIO()
    buf.write("# schema=v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STAT_CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _same_n(perms: Sequence[EntryPermutation]) -> int:
    Ns = {p.N for p in perms}
    if len(Ns) != 1:
        raise ValueError(f"permutations have mixed sizes {sorted(Ns)}")
    return Ns.pop()


def stat_transpose_fixed(p: EntryPermutation, seed: int | None = None) -> StatReport:
    """Cells with ``sigma(i, j) = T(sigma(j, i))``."""
    tr = transpose_table(p.N)
    raw = int(np.count_nonzero(p.table == tr[p.table[tr]]))
    return StatReport("L32i", p.N, raw, Fraction(1), seed)


def stat_row_sup(p: EntryPermutation, seed: int | None = None) -> StatReport:
    """Max over rows i of #(j, k) with ``sigma(i,j)`` in ``{T sigma(j,k), T sigma(k,j)}``.

    The second coincidence is read as ``T o sigma o T (j, k)``; the literal
    ``sigma(k, j)`` holds for every j at k = i and would not be a coincidence.
    """
    N = p.N
    tr = transpose_table(N)
    f = np.arange(N * N)
    j = f % N
    d = p.inverse_table[tr[p.table]]
    hit = (d // N == j) | (d % N == j)
    per_row = np.bincount(f // N, weights=hit, minlength=N)
    return StatReport("L32ii", N, int(per_row.max()), Fraction(1, 2), seed)


def _quad_partner(s1, s3, N):
    tr = transpose_table(N)
    f = np.arange(N * N)
    kl = s3.inverse_table[tr[s1.table]]
    return f // N, f % N, kl // N, kl % N, tr


def stat_quad_cycle(s1, s2, s3, s4, seed: int | None = None) -> StatReport:
    """#(i,j,k,l) with ``s1(i,j) = T s3(k,l)`` and ``s2(j,k) = T s4(l,i)``."""
    N = _same_n([s1, s2, s3, s4])
    i, j, k, l, tr = _quad_partner(s1, s3, N)
    ok = s2.table[j * N + k] == tr[s4.table[l * N + i]]
    return StatReport("C1", N, int(np.count_nonzero(ok)), Fraction(2), seed)


def stat_hex(s1, s2, s3, s4, seed: int | None = None) -> StatReport:
    """#(i,j,k,l,a,b) with ``s1(i,j) = T s3(k,l)`` and ``s2(a,k) = T s4(b,i)``."""
    N = _same_n([s1, s2, s3, s4])
    i, j, k, l, tr = _quad_partner(s1, s3, N)
    # M[k, i] = #{a : s4^{-1}(T s2(a, k)) lies in column i}
    g = np.arange(N * N)
    e = s4.inverse_table[tr[s2.table]]
    M = np.bincount((g % N) * N + e % N, minlength=N * N)
    raw = int(M[k * N + i].sum())
    return StatReport("C2", N, raw, Fraction(3), seed)


def first_projection(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return rows


def _as_cell_map(m) -> CellMap:
    if isinstance(m, EntryPermutation):
        t, N = m.table, m.N
        return lambda r, c: divmod(t[r * N + c], N)
    return m


def _identity_map(r, c):
    return r, c


def _transpose_map(r, c):
    return c, r


LEMMA_EXPONENTS = {
    "L33ii": Fraction(3), "L42i": Fraction(1), "L42ii": Fraction(1, 2),
    "L43i": Fraction(2), "L43ii": Fraction(3), "L44i": Fraction(2),
    "L44ii": Fraction(3), "L45": Fraction(3),
}


def stat_lemma_family(kind: str, permutations: Sequence[EntryPermutation],
                      aux: Mapping | None = None, N: int | None = None,
                      seed: int | None = None) -> StatReport:
    """Coincidence count for one of the remaining lemma statistics.

    ``permutations`` and ``aux`` per kind (cell maps are 0-based vectorised
    callables ``(rows, cols) -> (rows, cols)``; projections map to one index):

    ========  ========================  =========================================
    kind      permutations              aux (defaults)
    ========  ========================  =========================================
    L33ii     (sigma, omega?)           phi: cell -> index (first projection)
    L42i      (omega, sigma)            -
    L42ii     (omega, sigma)            -
    L43i      (sigma,)                  f, g: cell maps (identity)
    L43ii     (sigma,)                  phi(i,j,a), psi(i,j,b) -> cells
    L44i      (sigma, eta?)             f (identity), g (transpose); eta = id
    L44ii     (sigma, omega, eta?)      h: cell -> index (first projection)
    L45       (sigma, omega, eta1, eta2)  -
    ========  ========================  =========================================

    ``omega`` must be the identity or transpose where the lemma asks for it.
    """
    if kind not in LEMMA_EXPONENTS:
        raise ValueError(f"unknown statistic kind {kind!r}")
    perms = list(permutations)
    if not perms:
        raise ValueError("at least one permutation is required")
    n = _same_n(perms)
    if N is not None and N != n:
        raise ValueError(f"N={N} does not match permutation size {n}")
    aux = dict(aux or {})
    raw, info = _LEMMA_FUNCS[kind](perms, aux, n)
    return StatReport(kind, n, int(raw), LEMMA_EXPONENTS[kind], seed, info)


def _cells(N):
    f = np.arange(N * N)
    return f, f // N, f % N


def _conjugate(p: EntryPermutation, omega: EntryPermutation | None) -> EntryPermutation:
    if omega is None or omega.kind == "identity":
        return p
    if omega.kind == "transpose":
        return EntryPermutation.transpose_conjugate(p)
    raise ValueError("omega must be the identity or the transpose")


def _l33ii(perms, aux, N):
    sigma = perms[0]
    sigma1 = _conjugate(sigma, perms[1] if len(perms) > 1 else None)
    phi = aux.get("phi", first_projection)
    tr = transpose_table(N)
    f, rows, cols = _cells(N)
    # M[h, i] = #{a : sigma1^{-1}(T sigma(a, h)) lies in column i}
    e = sigma1.inverse_table[tr[sigma.table]]
    M = np.bincount(cols * N + e % N, minlength=N * N)
    img = sigma.table
    h = np.asarray(phi(img // N, img % N))
    return M[h * N + rows].sum(), None


def _l42i(perms, aux, N):
    omega, sigma = perms[:2]
    tr = transpose_table(N)
    return np.count_nonzero(omega.table == sigma.table[tr]), None


def _l42ii(perms, aux, N):
    omega, sigma = perms[:2]
    f, rows, cols = _cells(N)
    d = sigma.inverse_table[omega.table]
    per_row = np.bincount(rows, weights=(d // N == cols), minlength=N)
    return per_row.max(), None


def _l43i(perms, aux, N):
    sigma = perms[0]
    fm = _as_cell_map(aux.get("f", _identity_map))
    gm = _as_cell_map(aux.get("g", _identity_map))
    f, rows, cols = _cells(N)
    fr, fc = fm(rows, cols)
    gr, gc = gm(rows, cols)
    return np.count_nonzero(sigma.table[np.asarray(fr) * N + fc] == np.asarray(gr) * N + gc), None


def default_phi_43(i, j, a):
    return i, a


def default_psi_43(i, j, b):
    return b, i


def _l43ii(perms, aux, N):
    sigma = perms[0]
    phi = aux.get("phi", default_phi_43)
    psi = aux.get("psi", default_psi_43)
    i, j, x = np.indices((N, N, N)).reshape(3, -1)
    base = (i * N + j) * (N * N)
    pr, pc = phi(i, j, x)
    qr, qc = psi(i, j, x)
    k1 = base + sigma.table[np.asarray(pr) * N + pc]
    k2 = base + np.asarray(qr) * N + qc
    u1, c1 = np.unique(k1, return_counts=True)
    u2, c2 = np.unique(k2, return_counts=True)
    _, i1, i2 = np.intersect1d(u1, u2, assume_unique=True, return_indices=True)
    raw = int((c1[i1] * c2[i2]).sum())
    return raw, {"hypothesis": check_l43ii_hypothesis(phi, psi, N)}


def check_l43ii_hypothesis(phi, psi, N: int, max_tuples: int = 1 << 20) -> bool | None:
    """Whether ``(phi(i,j,a), psi(i,j,b))`` determines ``(i, a, b)``.

    Returns ``None`` when ``N^4`` exceeds ``max_tuples`` (not checked).
    """
    if N ** 4 > max_tuples:
        return None
    i, j, a, b = np.indices((N, N, N, N)).reshape(4, -1)
    pr, pc = phi(i, j, a)
    qr, qc = psi(i, j, b)
    key = ((np.asarray(pr) * N + pc) * N * N) + np.asarray(qr) * N + qc
    val = (i * N + a) * N + b
    order = np.lexsort((val, key))
    key, val = key[order], val[order]
    same_key = key[1:] == key[:-1]
    return bool(np.all(val[1:][same_key] == val[:-1][same_key]))


def _l44i(perms, aux, N):
    sigma = perms[0]
    eta = perms[1] if len(perms) > 1 else EntryPermutation.identity(N)
    fm = _as_cell_map(aux.get("f", _identity_map))
    gm = _as_cell_map(aux.get("g", _transpose_map))
    f, rows, cols = _cells(N)
    fr, fc = fm(rows, cols)
    gr, gc = gm(rows, cols)
    ff = np.asarray(fr) * N + fc
    gg = np.asarray(gr) * N + gc
    ok = (ff != gg) & (sigma.table[ff] == eta.table[sigma.table[gg]])
    return np.count_nonzero(ok), None


def _l44ii(perms, aux, N):
    sigma, omega = perms[:2]
    if not omega.is_symbolic():
        raise ValueError("omega must be the identity or the transpose")
    eta = perms[2] if len(perms) > 2 else EntryPermutation.identity(N)
    h = aux.get("h", first_projection)
    f, rows, cols = _cells(N)
    # cell (b, i) -> c = omega(b, i), d = sigma^{-1} eta sigma (c); need (a, h(i,j)) = d != c
    c = omega.table[f]
    d = sigma.inverse_table[eta.table[sigma.table[c]]]
    good = d != c
    M = np.bincount((cols * N + d % N)[good], minlength=N * N)  # M[i, x]
    hv = np.asarray(h(rows, cols))
    return M[rows * N + hv].sum(), None


def _l45(perms, aux, N):
    if len(perms) < 4:
        raise ValueError("L45 needs (sigma, omega, eta1, eta2)")
    sigma, omega, eta1, eta2 = perms[:4]
    if not omega.is_symbolic():
        raise ValueError("omega must be the identity or the transpose")
    f, rows, cols = _cells(N)
    # M[k, i] = #{a : eta1^{-1}(sigma(a, k)) lies in column i}
    e = eta1.inverse_table[sigma.table]
    M = np.bincount(cols * N + e % N, minlength=N * N)
    k = rows
    c = omega.table[f]
    ij = eta2.inverse_table[sigma.table[c]]
    i = ij // N
    total = M[k * N + i].astype(np.int64)
    # drop the tuple with (a, k) = omega(k, l)
    excl = (c % N == k) & (eta1.inverse_table[sigma.table[c]] % N == i)
    return (total - excl).sum(), None


_LEMMA_FUNCS = {
    "L33ii": _l33ii, "L42i": _l42i, "L42ii": _l42ii, "L43i": _l43i,
    "L43ii": _l43ii, "L44i": _l44i, "L44ii": _l44ii, "L45": _l45,
}
