import math

import pytest
from hypothesis import given, strategies as st

from infperm.errors import SizeLimitError
from infperm.partitions import (
    NcPartition,
    PairPartition,
    enumerate_nc,
    enumerate_pair_partitions,
    is_noncrossing,
    pairs_cross,
    restrict,
)
from oracles import noncrossing_by_scan


def double_factorial(n):
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def catalan(n):
    return math.comb(2 * n, n) // (n + 1)


@pytest.mark.parametrize("m", range(0, 11))
def test_pairing_counts(m):
    expected = double_factorial(m - 1) if m % 2 == 0 and m > 0 else 0
    assert len(enumerate_pair_partitions(m)) == expected


def test_pairings_are_distinct_and_sorted():
    ps = enumerate_pair_partitions(8)
    keys = [p.partner for p in ps]
    assert keys == sorted(set(keys))


def test_m4_order_and_format():
    assert [str(p) for p in enumerate_pair_partitions(4)] == ["(1,2)(3,4)", "(1,3)(2,4)", "(1,4)(2,3)"]


@pytest.mark.parametrize("n", range(1, 9))
def test_nc_counts(n):
    assert len(enumerate_nc(n)) == catalan(n)


def test_nc_examples():
    assert [str(p) for p in enumerate_nc(3)] == ["{1,2,3}", "{1,2}{3}", "{1,3}{2}", "{1}{2,3}", "{1}{2}{3}"]
    assert enumerate_nc(1)[0].is_full()
    assert sum(p.is_full() for p in enumerate_nc(6)) == 1


@pytest.mark.parametrize("m", [2, 4, 6, 8, 10])
def test_noncrossing_pairings_are_catalan(m):
    ps = enumerate_pair_partitions(m)
    assert sum(is_noncrossing(p) for p in ps) == catalan(m // 2)


@pytest.mark.parametrize("m", [4, 6, 8, 10])
def test_noncrossing_matches_quadruple_scan(m):
    for p in enumerate_pair_partitions(m):
        assert is_noncrossing(p) == noncrossing_by_scan(p)


def test_caps():
    with pytest.raises(SizeLimitError):
        enumerate_pair_partitions(14)
    with pytest.raises(SizeLimitError):
        enumerate_nc(11)
    assert len(enumerate_pair_partitions(14, cap=14)) == double_factorial(13)


def test_invalid_pair_partitions():
    with pytest.raises(ValueError):
        PairPartition((1, 2))  # fixed points
    with pytest.raises(ValueError):
        PairPartition((2, 3, 1))
    with pytest.raises(ValueError):
        PairPartition.from_pairs([(1, 2), (2, 3)])
    with pytest.raises(ValueError):
        enumerate_nc(0)


def test_invalid_nc_partition():
    with pytest.raises(ValueError):
        NcPartition(4, ((1, 3), (2, 4)))
    with pytest.raises(ValueError):
        NcPartition(3, ((1, 2),))


def test_pairs_cross():
    assert pairs_cross((1, 3), (2, 4))
    assert not pairs_cross((1, 4), (2, 3))
    assert not pairs_cross((1, 2), (3, 4))


def test_restrict():
    p = PairPartition.from_pairs([(1, 3), (2, 4)])
    inside, leaving = restrict(p, {1, 3, 4})
    assert inside == {(1, 3), (3, 1)}
    assert leaving == {4}
    assert restrict(p, set()) == (frozenset(), frozenset())
    with pytest.raises(ValueError):
        restrict(p, {5})


pairings = st.integers(1, 5).flatmap(lambda h: st.permutations(range(1, 2 * h + 1))).map(
    lambda order: PairPartition.from_pairs(zip(order[::2], order[1::2]))
)


@given(pairings)
def test_pairing_is_involution(p):
    for k in range(1, p.m + 1):
        assert p(p(k)) == k != p(k)
    assert PairPartition.from_pairs(p.pairs()) == p


@given(pairings)
def test_noncrossing_iff_no_crossing_chords(p):
    ch = p.pairs()
    crossing = any(pairs_cross(a, b) for i, a in enumerate(ch) for b in ch[i + 1:])
    assert is_noncrossing(p) == (not crossing)


@given(pairings, st.sets(st.integers(1, 10)))
def test_restrict_partitions_b(p, B):
    B = {k for k in B if k <= p.m}
    inside, leaving = restrict(p, B)
    assert {k for k, _ in inside} | set(leaving) == B
    assert all((l, k) in inside for k, l in inside)
