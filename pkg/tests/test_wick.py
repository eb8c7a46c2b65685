import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from infperm.errors import SizeLimitError, UndefinedExponentError
from infperm.partitions import PairPartition, enumerate_pair_partitions, is_noncrossing
from infperm.perms import EntryPermutation, sample_uniform
from infperm.wick import (
    PairingClass,
    WordSpec,
    admissible_tuples,
    asymptotic_trace,
    audit_restricted_exponents,
    classify_pairing,
    contributions,
    contributions_csv,
    count_admissible,
    count_admissible_restricted,
    expected_trace_exact,
    expected_trace_naive,
    exponent_restricted,
    null_infinitesimal_prediction,
    resolve_handle,
    v_pi,
)

P = PairPartition.from_pairs
ID, T = "id", "T"


def test_count_examples():
    for N in range(1, 6):
        assert count_admissible(P([(1, 2)]), (ID, ID), N) == N * N
        assert count_admissible(P([(1, 2)]), (ID, T), N) == N
        assert count_admissible(P([(1, 3), (2, 4)]), (ID,) * 4, N) == N


@pytest.mark.parametrize("N", range(1, 6))
def test_search_matches_symbolic(N):
    for m in (2, 4, 6):
        for w in itertools.product((ID, T), repeat=m):
            for p in enumerate_pair_partitions(m):
                assert count_admissible(p, w, N, method="search") == count_admissible(p, w, N, method="symbolic")


def test_v_pi_examples():
    for N in range(2, 6):
        assert v_pi(P([(1, 2)]), (ID, ID), N) == 1
        assert v_pi(P([(1, 2)]), (ID, T), N) == F(1, N)
        assert v_pi(P([(1, 3), (2, 4)]), (ID,) * 4, N) == F(1, N * N)


@pytest.mark.parametrize("N", range(2, 9))
def test_trace_identities(N):
    assert expected_trace_exact((ID, ID), N) == 1
    assert expected_trace_exact((ID,) * 4, N) == 2 + F(1, N * N)
    assert expected_trace_exact((ID, T), N) == F(1, N)
    assert expected_trace_exact((ID, ID, T, T), N) == 1 + F(1, N) + F(1, N * N)
    assert expected_trace_exact((ID, T, ID), N) == 0


@pytest.mark.parametrize("N", range(2, 6))
def test_trace_identities_by_literal_scan(N):
    idt = EntryPermutation.identity(N)
    tr = EntryPermutation.transpose(N)
    assert oracles.wick_trace([idt, idt]) == 1
    assert oracles.wick_trace([idt] * 4) == 2 + F(1, N * N)
    assert oracles.wick_trace([idt, tr]) == F(1, N)
    assert oracles.wick_trace([idt, idt, tr, tr]) == 1 + F(1, N) + F(1, N * N)


@pytest.mark.parametrize("N", range(2, 6))
def test_engine_matches_naive_with_explicit_sigma(N):
    reg = {"s": sample_uniform(N, 11 * N)}
    letters = (ID, T, "s", "s*")
    for m in (2, 4):
        for w in itertools.product(letters, repeat=m):
            perms = [resolve_handle(x, N, reg) for x in w]
            exact = expected_trace_exact(w, N, reg)
            assert exact == expected_trace_naive(perms)
            if m == 2 or N <= 3:
                assert exact == oracles.wick_trace(perms)


def test_restricted_examples():
    p = P([(1, 2), (3, 4)])
    w = (ID, T, ID, T)
    assert count_admissible_restricted(p, w, 3, range(1, 5)) == count_admissible(p, w, 3)
    assert count_admissible_restricted(p, w, 3, []) == 1
    # direct scan: (i1, j1, i2, j2) chains with a cyclic extension
    N = 3
    perms = [resolve_handle(x, N) for x in w]
    full = set()
    for t in itertools.product(range(N), repeat=4):
        cells = [oracles.cell(perms[k], t[k], t[(k + 1) % 4]) for k in range(4)]
        if cells[1] == oracles.tr(cells[0]) and cells[3] == oracles.tr(cells[2]):
            full.add(t)
    assert count_admissible_restricted(p, w, N, [1, 2]) == len({(t[0], t[1], t[1], t[2]) for t in full})
    q = P([(1, 2)])
    assert count_admissible_restricted(q, (ID, T), 4, [1]) == 4
    assert exponent_restricted(q, (ID, T), 4, [1]) == -1
    assert exponent_restricted(q, (ID, T), 4, [1, 2]) == -1


def test_restricted_empty_set_with_no_solutions():
    N = 2
    s = EntryPermutation.explicit([1, 0, 2, 3])
    p = P([(1, 2)])
    reg = {"s": s}
    # s and T do not line up on any cyclic pair at N=2
    if count_admissible(p, ("s", ID), N, reg) == 0:
        assert count_admissible_restricted(p, ("s", ID), N, [], reg) == 0
        with pytest.raises(UndefinedExponentError):
            exponent_restricted(p, ("s", ID), N, [1], reg)
    with pytest.raises(ValueError):
        count_admissible_restricted(p, (ID, ID), N, [3])


def test_errors_and_caps():
    with pytest.raises(ValueError):
        count_admissible(P([(1, 2)]), (ID, ID, ID), 3)
    with pytest.raises(KeyError):
        count_admissible(P([(1, 2)]), (ID, "sigma"), 3)
    with pytest.raises(ValueError):
        count_admissible(P([(1, 2)]), [sample_uniform(2, 0), sample_uniform(3, 0)])
    reg = {"s": sample_uniform(9, 0)}
    with pytest.raises(SizeLimitError):
        count_admissible(P([(1, 2)]), ("s", "s"), 9, reg)
    with pytest.raises(ValueError):
        count_admissible(P([(1, 2)]), ("s", "s"), 9, reg, method="symbolic")


def test_wordspec_and_handles():
    ws = WordSpec(("id", "T", "s*"))
    assert ws.m == 3
    s = sample_uniform(3, 5)
    perms = ws.resolve(3, {"s": s})
    assert perms[2].same_action(EntryPermutation.transpose_conjugate(s))
    # registry entries shadow built-in names
    assert resolve_handle("t", 3, {"t": s}).same_action(s)
    assert resolve_handle("t", 3).same_action(EntryPermutation.transpose(3))


@pytest.mark.parametrize("eps,p,cls", [
    ((ID, T, ID, T), [(1, 3), (2, 4)], 2),
    ((ID, ID, T, T), [(1, 3), (2, 4)], 1),
    ((ID, ID, T, T), [(1, 2), (3, 4)], 0),
    ((ID, T), [(1, 2)], 1),
    ((ID, ID, ID, ID), [(1, 3), (2, 4)], 2),
])
def test_classification_examples(eps, p, cls):
    assert classify_pairing(P(p), eps) == cls


def test_class_names():
    assert str(PairingClass(1)) == "Class1"


@pytest.mark.parametrize("eps,expected", [
    ((ID, T), (0, 1)),
    ((ID, ID, T, T), (1, 1)),
    ((ID,) * 4, (2, 0)),
    ((ID, T, ID), (0, 0)),
])
def test_asymptotic_trace(eps, expected):
    assert asymptotic_trace(eps) == expected


def test_classification_against_exact_counts_length_6():
    for m in (2, 4, 6):
        for w in itertools.product((ID, T), repeat=m):
            for p in enumerate_pair_partitions(m):
                cls = classify_pairing(p, w)
                for N in (4, 5):
                    v = v_pi(p, w, N)
                    assert (v == 1) if cls == 0 else (v == F(1, N)) if cls == 1 else (v <= F(1, N * N))


def test_class0_is_noncrossing_and_matched():
    for w in itertools.product((ID, T), repeat=6):
        for p in enumerate_pair_partitions(6):
            matched = all(w[a - 1] == w[b - 1] for a, b in p.pairs())
            assert (classify_pairing(p, w) == 0) == (is_noncrossing(p) and matched)


def test_asymptotics_match_exact_curve():
    for w in itertools.product((ID, T), repeat=4):
        phi, dphi = asymptotic_trace(w)
        vals = {N: expected_trace_exact(w, N) for N in (10, 20, 40)}
        slopes = [N * (vals[N] - phi) for N in vals]
        assert all(abs(s - dphi) <= F(4, N) for s, N in zip(slopes, vals))


def test_null_prediction():
    assert [str(p) for p in null_infinitesimal_prediction(("1", "*"))] == ["(1,2)"]
    assert null_infinitesimal_prediction(("1", "1")) == []
    assert len(null_infinitesimal_prediction(("1", "*", "1", "*"))) == 2
    assert null_infinitesimal_prediction(("1", "*", "1")) == []


def test_contributions_and_csv():
    cs = contributions((ID, ID, T, T), 3)
    assert sum(c.v_value for c in cs) == 1 + F(1, 3) + F(1, 9)
    assert all(c.v_value == F(c.admissible_count, 27) for c in cs)
    assert sorted(c.exponent for c in cs) == [-2, -1, 0]
    text = contributions_csv((ID, ID, T, T), 3)
    lines = text.splitlines()
    assert lines[0] == "# schema=v1"
    assert lines[1] == "pairing,count,v_numerator,v_denominator,class"
    assert lines[-1] == "# total=13/9"


def test_odd_length_is_zero():
    assert expected_trace_exact((ID,), 4) == 0
    assert expected_trace_naive([EntryPermutation.identity(2)] * 3) == 0


@pytest.mark.parametrize("m", [4, 6])
def test_restricted_exponent_audit_small(m):
    N = 3
    for w in itertools.product((ID, T), repeat=m):
        perms = [resolve_handle(x, N) for x in w]
        for p in enumerate_pair_partitions(m):
            assert audit_restricted_exponents(p, perms) == []


def test_restricted_exponent_dominates_full():
    N = 3
    p = P([(1, 3), (2, 4)])
    w = (ID, ID, T, T)
    full = exponent_restricted(p, w, N, range(1, 5))
    for r in range(1, 5):
        for B in itertools.combinations(range(1, 5), r):
            assert exponent_restricted(p, w, N, B) >= full


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
def test_admissible_tuples_satisfy_constraints(N, seed, m):
    rng = np.random.default_rng(seed)
    perms = [oracles.random_explicit(N, rng) for _ in range(m)]
    for p in enumerate_pair_partitions(m):
        tuples = admissible_tuples(p, perms)
        seen = {tuple(t) for t in tuples}
        assert len(seen) == len(tuples)
        for t in itertools.product(range(N), repeat=m):
            cells = [oracles.cell(perms[k], t[k], t[(k + 1) % m]) for k in range(m)]
            ok = all(cells[b - 1] == oracles.tr(cells[a - 1]) for a, b in p.pairs())
            assert ok == (t in seen)
