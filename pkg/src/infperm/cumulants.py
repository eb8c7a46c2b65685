"""Free and infinitesimal free cumulants on words.

Moments ``phi``/``phi_prime`` and cumulants ``kappa``/``kappa_prime`` are
tabulated on words (tuples of letter symbols) and related through sums over
NC(n). Arithmetic is generic: exact ``Fraction``/``int`` tables stay exact,
float tables (Monte Carlo input) stay float.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import IncompleteTableError
from .partitions import NcPartition, enumerate_nc

Word = tuple[str, ...]
EMPTY: Word = ()


def words_up_to(alphabet: Sequence[str], degree: int, start: int = 1) -> Iterator[Word]:
    """All words over ``alphabet`` of length ``start..degree``, shortest first."""
    for n in range(start, degree + 1):
        yield from itertools.product(alphabet, repeat=n)


def subword(word: Sequence, block: Iterable[int]) -> Word:
    return tuple(word[i - 1] for i in block)


def _lookup(table: Mapping[Word, Number], key: Word, name: str):
    try:
        return table[key]
    except KeyError:
        raise IncompleteTableError(f"{name} missing entry for word {key}") from None


@dataclass
class InfinitesimalLaw:
    """A pair of functionals ``(phi, phi_prime)`` tabulated on words.

    ``tags`` optionally assigns each letter to a subalgebra. ``phi_err`` and
    ``phi_prime_err`` carry one-sigma uncertainties when the law comes from
    sampled data.
    """

    alphabet: tuple[str, ...]
    phi: dict[Word, Number]
    phi_prime: dict[Word, Number]
    tags: dict[str, Hashable] | None = None
    phi_err: dict[Word, float] = field(default_factory=dict)
    phi_prime_err: dict[Word, float] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.phi = {tuple(k): v for k, v in self.phi.items()}
        self.phi_prime = {tuple(k): v for k, v in self.phi_prime.items()}
        if self.phi.setdefault(EMPTY, 1) != 1:
            raise ValueError("phi(1) must equal 1")
        if self.phi_prime.setdefault(EMPTY, 0) != 0:
            raise ValueError("phi'(1) must equal 0")
        letters = set(self.alphabet)
        for w in itertools.chain(self.phi, self.phi_prime):
            if not set(w) <= letters:
                raise ValueError(f"word {w} uses letters outside the alphabet")

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.phi), default=0)


@dataclass
class CumulantTable:
    """Free cumulants ``kappa`` and infinitesimal free cumulants ``kappa_prime``."""

    alphabet: tuple[str, ...]
    degree: int
    kappa: dict[Word, Number]
    kappa_prime: dict[Word, Number]

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.kappa = {tuple(k): v for k, v in self.kappa.items()}
        self.kappa_prime = {tuple(k): v for k, v in self.kappa_prime.items()}

    def to_json(self) -> str:
        entries = [
            {"word": list(w), "kappa": _encode(self.kappa.get(w, 0)),
             "kappa_prime": _encode(self.kappa_prime.get(w, 0))}
            for w in words_up_to(self.alphabet, self.degree)
        ]
        doc = {"degree": self.degree, "alphabet": list(self.alphabet), "entries": entries}
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CumulantTable":
        doc = json.loads(text)
        kappa, kappa_prime = {}, {}
        for e in doc["entries"]:
            w = tuple(e["word"])
            kappa[w] = _decode(e["kappa"])
            kappa_prime[w] = _decode(e["kappa_prime"])
        alphabet = doc.get("alphabet") or sorted({x for w in kappa for x in w})
        return cls(tuple(alphabet), int(doc["degree"]), kappa, kappa_prime)


def _encode(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _decode(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, list):
        return complex(*x)
    return x


def eval_f_pi(f: Mapping[Word, Number], p: NcPartition, word: Sequence[str]):
    """Block product of ``f`` over the blocks of ``p`` applied to ``word``."""
    if len(word) != p.n:
        raise ValueError(f"word length {len(word)} != partition size {p.n}")
    out = 1
    for block in p.blocks:
        out = out * _lookup(f, subword(word, block), "f")
        if out == 0:
            return out
    return out


def eval_partial_f_pi(f: Mapping[Word, Number], f_prime: Mapping[Word, Number],
                      p: NcPartition, word: Sequence[str]):
    """First-order term of ``f_pi``: one block primed, the others plain."""
    if len(word) != p.n:
        raise ValueError(f"word length {len(word)} != partition size {p.n}")
    plain = [_lookup(f, subword(word, b), "f") for b in p.blocks]
    primed = [_lookup(f_prime, subword(word, b), "f'") for b in p.blocks]
    total = 0
    for v, fp in enumerate(primed):
        if fp == 0:
            continue
        term = fp
        for w, fw in enumerate(plain):
            if w != v:
                term = term * fw
        total = total + term
    return total


def cumulants_to_moments(ct: CumulantTable, max_degree: int | None = None) -> InfinitesimalLaw:
    """Moments from cumulants by summing over NC(n)."""
    degree = ct.degree if max_degree is None else max_degree
    phi, phi_prime = {}, {}
    for w in words_up_to(ct.alphabet, degree):
        ncs = enumerate_nc(len(w))
        phi[w] = sum(eval_f_pi(ct.kappa, p, w) for p in ncs)
        phi_prime[w] = sum(eval_partial_f_pi(ct.kappa, ct.kappa_prime, p, w) for p in ncs)
    return InfinitesimalLaw(ct.alphabet, phi, phi_prime)


def moments_to_cumulants(law: InfinitesimalLaw, max_degree: int | None = None) -> CumulantTable:
    """Invert the NC(n) moment-cumulant relation by induction on word length."""
    degree = law.degree if max_degree is None else max_degree
    kappa: dict[Word, Number] = {}
    kappa_prime: dict[Word, Number] = {}
    for w in words_up_to(law.alphabet, degree):
        ncs = enumerate_nc(len(w))
        k = _lookup(law.phi, w, "phi")
        kp = _lookup(law.phi_prime, w, "phi'")
        for p in ncs:
            if p.is_full():
                continue
            k = k - eval_f_pi(kappa, p, w)
            kp = kp - eval_partial_f_pi(kappa, kappa_prime, p, w)
        kappa[w] = k
        kappa_prime[w] = kp
    return CumulantTable(law.alphabet, degree, kappa, kappa_prime)


def linear_error_coefficients(kappa: Mapping[Word, Number], alphabet: Sequence[str],
                              degree: int) -> dict[Word, dict[Word, Number]]:
    """Sensitivity of each cumulant to each moment.

    Returns ``coef[w][u] = d kappa'(w) / d phi'(u)`` at fixed ``kappa``. The
    same coefficients give the first-order sensitivity ``d kappa(w) / d phi(u)``
    because the linearised plain recursion has the primed recursion's form.
    """
    coef: dict[Word, dict[Word, Number]] = {}
    for w in words_up_to(alphabet, degree):
        row: dict[Word, Number] = {w: 1}
        for p in enumerate_nc(len(w)):
            if p.is_full():
                continue
            subs = [subword(w, b) for b in p.blocks]
            vals = [kappa[s] for s in subs]
            nonzero = [i for i, v in enumerate(vals) if v != 0]
            if len(nonzero) < len(vals) - 1:
                continue
            for v_idx, s in enumerate(subs):
                weight = 1
                for j, val in enumerate(vals):
                    if j != v_idx:
                        weight = weight * val
                if weight == 0:
                    continue
                for u, c in coef[s].items():
                    row[u] = row.get(u, 0) - weight * c
        coef[w] = {u: c for u, c in row.items() if c != 0}
    return coef


@dataclass
class FreenessViolation:
    word: Word
    quantity: str
    value: Number
    threshold: float


@dataclass
class FreenessReport:
    """Outcome of an infinitesimal-freeness test."""

    degree: int
    violations: list[FreenessViolation]
    alternating_violations: list[FreenessViolation]
    checked_words: int
    table: CumulantTable

    @property
    def is_free(self) -> bool:
        return not self.violations and not self.alternating_violations


def is_mixed(word: Sequence[str], tags: Mapping[str, Hashable]) -> bool:
    return len(word) >= 2 and len({tags[x] for x in word}) > 1


def check_infinitesimal_freeness(law: InfinitesimalLaw,
                                 tags: Mapping[str, Hashable] | None = None,
                                 max_degree: int | None = None,
                                 nsigma: float = 3.0,
                                 atol: float = 0.0,
                                 alternating: bool = True) -> FreenessReport:
    """Test vanishing of mixed ``kappa`` and ``kappa_prime`` up to ``max_degree``.

    With uncertainties on the law, a mixed cumulant is flagged when it exceeds
    ``nsigma`` times its linearly propagated standard error (plus ``atol``);
    otherwise any value beyond ``atol`` is flagged. When ``alternating`` is
    set, the centred-alternating moment conditions are checked too (only for
    laws without uncertainties).
    """
    tags = dict(tags if tags is not None else (law.tags or {}))
    missing = [a for a in law.alphabet if a not in tags]
    if missing:
        raise ValueError(f"letters without an algebra tag: {missing}")
    degree = law.degree if max_degree is None else max_degree
    table = moments_to_cumulants(law, degree)
    has_err = bool(law.phi_err or law.phi_prime_err)
    coef = linear_error_coefficients(table.kappa, law.alphabet, degree) if has_err else {}

    def sigma(w, errs):
        if not has_err:
            return 0.0
        return sum(abs(c) * errs.get(u, 0.0) for u, c in coef[w].items())

    violations = []
    checked = 0
    for w in words_up_to(law.alphabet, degree, start=2):
        if not is_mixed(w, tags):
            continue
        checked += 1
        for name, value, errs in (("kappa", table.kappa[w], law.phi_err),
                                  ("kappa_prime", table.kappa_prime[w], law.phi_prime_err)):
            thr = nsigma * sigma(w, errs) + atol
            if abs(value) > thr:
                violations.append(FreenessViolation(w, name, value, thr))

    alt = []
    if alternating and not has_err:
        alt = _alternating_violations(law, tags, degree, atol)
    return FreenessReport(degree, violations, alt, checked, table)


def runs(word: Sequence[str], tags: Mapping[str, Hashable]) -> list[Word]:
    """Split a word into maximal runs of letters from one subalgebra."""
    out: list[list[str]] = []
    for x in word:
        if out and tags[out[-1][-1]] == tags[x]:
            out[-1].append(x)
        else:
            out.append([x])
    return [tuple(r) for r in out]


def centered_product_moment(phi: Mapping[Word, Number], elements: Sequence[Word],
                            centers: Sequence[Number], functional: Mapping[Word, Number] | None = None):
    """``functional((w_1 - c_1)(w_2 - c_2)...)`` expanded over subsets."""
    functional = phi if functional is None else functional
    total = 0
    n = len(elements)
    for keep in itertools.product((True, False), repeat=n):
        coeff = 1
        word: list[str] = []
        for k, w, c in zip(keep, elements, centers):
            if k:
                word.extend(w)
            else:
                coeff = coeff * (-c)
        if coeff == 0:
            continue
        total = total + coeff * _lookup(functional, tuple(word), "phi")
    return total


def _alternating_violations(law: InfinitesimalLaw, tags, degree: int, atol: float):
    # centred alternating products are exactly the maximal-run segmentations
    out = []
    for w in words_up_to(law.alphabet, degree, start=2):
        elems = runs(w, tags)
        if len(elems) < 2:
            continue
        centers = [law.phi[e] for e in elems]
        lhs = centered_product_moment(law.phi, elems, centers)
        if abs(lhs) > atol:
            out.append(FreenessViolation(w, "phi_alternating", lhs, atol))
        lhs_p = centered_product_moment(law.phi, elems, centers, law.phi_prime)
        rhs_p = 0
        for j, e in enumerate(elems):
            dp = law.phi_prime[e]
            if dp == 0:
                continue
            rest = elems[:j] + elems[j + 1:]
            rest_c = centers[:j] + centers[j + 1:]
            rhs_p = rhs_p + dp * centered_product_moment(law.phi, rest, rest_c)
        if abs(lhs_p - rhs_p) > atol:
            out.append(FreenessViolation(w, "phi_prime_alternating", lhs_p - rhs_p, atol))
    return out


def odd_alternating_phi_prime(law: InfinitesimalLaw, elements: Sequence[Word],
                              tags: Mapping[str, Hashable]):
    """Closed form for ``phi'`` of a centred alternating product.

    Nonzero only for odd length with mirrored subalgebra labels; then it is
    ``phi(x_1 x_n) phi(x_2 x_{n-1}) ... phi'(x_middle)`` with centred ``x``.
    """
    n = len(elements)
    labels = [tags[e[0]] for e in elements]
    if n % 2 == 0 or any(labels[j] != labels[n - 1 - j] for j in range(n // 2)):
        return 0
    centers = [law.phi[e] for e in elements]
    out = law.phi_prime[elements[n // 2]]
    for j in range(n // 2):
        pair = [elements[j], elements[n - 1 - j]]
        out = out * centered_product_moment(law.phi, pair, [centers[j], centers[n - 1 - j]])
    return out


def predicted_transpose_cumulants(eps: Sequence, rule: str = "statement") -> int:
    """Limit of the infinitesimal cumulant of ``(G^eps_1, ..., G^eps_p)``.

    Each ``eps_j`` is one of two symbols (identity or transpose). Returns 1
    iff ``p = 2m``, ``eps_1 != eps_{m+1}``, ``eps_m != eps_{2m}`` and
    ``eps_s != eps_{2m+1-s}`` for ``s = 2..m-1``; else 0.

    ``rule="shift"`` uses ``eps_s != eps_{m+s}`` for every ``s`` instead. The
    two rules agree for ``p <= 6``; from ``p = 8`` on, the cumulants computed
    from exact pairing counts follow the shift rule.
    """
    p = len(eps)
    if p == 0 or p % 2:
        return 0
    m = p // 2
    e = (None,) + tuple(eps)
    if rule == "shift":
        return int(all(e[s] != e[m + s] for s in range(1, m + 1)))
    if rule != "statement":
        raise ValueError(f"unknown rule {rule!r}")
    if e[1] == e[m + 1] or e[m] == e[2 * m]:
        return 0
    return int(all(e[s] != e[2 * m + 1 - s] for s in range(2, m)))


def semicircular_family_table(alphabet: Sequence[str],
                              covariance: Mapping[tuple[str, str], Number],
                              degree: int,
                              kappa_prime: Callable[[Word], Number] | None = None) -> CumulantTable:
    """Cumulant table whose only plain cumulants are ``kappa_2 = covariance``.

    Covers semicircular and circular systems. ``kappa_prime`` defaults to 0.
    """
    kappa, kp = {}, {}
    for w in words_up_to(alphabet, degree):
        kappa[w] = covariance.get(w, 0) if len(w) == 2 else 0
        kp[w] = kappa_prime(w) if kappa_prime else 0
    return CumulantTable(tuple(alphabet), degree, kappa, kp)


def transpose_cumulant_table(degree: int, symbols: tuple[str, str] = ("id", "T")) -> CumulantTable:
    """Limit cumulants of ``{G, G^T}``: ``kappa_2`` on equal letters, primed per the rule above."""
    cov = {(a, a): 1 for a in symbols}
    return semicircular_family_table(symbols, cov, degree, predicted_transpose_cumulants)
