import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from infperm.cumulants import (
    CumulantTable,
    InfinitesimalLaw,
    centered_product_moment,
    check_infinitesimal_freeness,
    cumulants_to_moments,
    eval_f_pi,
    eval_partial_f_pi,
    moments_to_cumulants,
    odd_alternating_phi_prime,
    predicted_transpose_cumulants,
    semicircular_family_table,
    transpose_cumulant_table,
    words_up_to,
)
from infperm.errors import IncompleteTableError
from infperm.harness import free_reference_phi
from infperm.partitions import NcPartition, enumerate_nc

G, GT = "id", "T"


def catalan(n):
    return math.comb(2 * n, n) // (n + 1)


def semicircle_law(degree=6):
    phi = {("x",) * n: (catalan(n // 2) if n % 2 == 0 else 0) for n in range(1, degree + 1)}
    return InfinitesimalLaw(("x",), phi, {w: 0 for w in phi})


def test_f_pi_examples():
    kappa = {(G, G): 1, (GT, GT): 1, (G, GT): 0, (GT, G): 0}
    assert eval_f_pi({("a", "b"): 1}, NcPartition(2, ((1, 2),)), ("a", "b")) == 1
    assert eval_f_pi(kappa, NcPartition(4, ((1, 2), (3, 4))), (G, G, GT, GT)) == 1
    assert eval_f_pi(kappa, NcPartition(4, ((1, 4), (2, 3))), (G, G, GT, GT)) == 0
    with pytest.raises(ValueError):
        eval_f_pi(kappa, NcPartition(2, ((1, 2),)), (G, G, G))


def test_partial_f_pi_examples():
    kappa = {(G, GT): 0}
    kp = {(G, GT): 1}
    assert eval_partial_f_pi(kappa, kp, NcPartition(2, ((1, 2),)), (G, GT)) == 1
    assert eval_partial_f_pi(kappa, kp, NcPartition(4, ((1, 2), (3, 4))), (G, GT, G, GT)) == 0
    zero = {(G, GT): 0}
    assert eval_partial_f_pi({(G, GT): 5}, zero, NcPartition(4, ((1, 2), (3, 4))), (G, GT, G, GT)) == 0


def test_semicircle_inversion():
    ct = moments_to_cumulants(semicircle_law())
    for n in range(1, 7):
        assert ct.kappa[("x",) * n] == (1 if n == 2 else 0)
        assert ct.kappa_prime[("x",) * n] == 0


def test_all_ones_cumulants_count_partitions_and_blocks():
    # kappa = kappa' = 1 gives |NC(n)| = Catalan(n) and the total block count C(2n-1, n)
    words = list(words_up_to(("x",), 7))
    ct = CumulantTable(("x",), 7, dict.fromkeys(words, 1), dict.fromkeys(words, 1))
    law = cumulants_to_moments(ct)
    for n in range(1, 8):
        assert law.phi[("x",) * n] == catalan(n)
        assert law.phi_prime[("x",) * n] == math.comb(2 * n - 1, n)


def test_transpose_table_moments():
    law = cumulants_to_moments(transpose_cumulant_table(4))
    assert (law.phi[(G, G, GT, GT)], law.phi_prime[(G, G, GT, GT)]) == (1, 1)
    assert (law.phi[(G, GT, G, GT)], law.phi_prime[(G, GT, G, GT)]) == (0, 0)
    assert (law.phi[(G,)], law.phi_prime[(G,)]) == (0, 0)


def test_incomplete_tables():
    law = InfinitesimalLaw(("x",), {("x",): 0}, {("x",): 0})
    with pytest.raises(IncompleteTableError):
        moments_to_cumulants(law, 2)
    ct = CumulantTable(("x",), 2, {("x",): 0}, {("x",): 0})
    with pytest.raises(IncompleteTableError):
        cumulants_to_moments(ct)


def test_law_unit_and_alphabet():
    law = InfinitesimalLaw(("x",), {}, {})
    assert law.phi[()] == 1 and law.phi_prime[()] == 0
    with pytest.raises(ValueError):
        InfinitesimalLaw(("x",), {(): 2}, {})
    with pytest.raises(ValueError):
        InfinitesimalLaw(("x",), {("y",): 0}, {})


def test_empty_alphabet_round_trip():
    law = InfinitesimalLaw((), {}, {})
    assert moments_to_cumulants(law, 3).kappa == {}


@pytest.mark.parametrize("eps,expected", [
    ((G, GT), 1),
    ((G, GT, G, GT), 0),
    ((G, G, GT, GT), 1),
    ((G,), 0),
    ((G, GT, G), 0),
    ((G, G), 0),
])
def test_predicted_transpose_cumulants(eps, expected):
    assert predicted_transpose_cumulants(eps) == expected


@pytest.mark.parametrize("p", range(1, 9))
def test_prediction_symmetric_under_swap(p):
    swap = {G: GT, GT: G}
    for eps in itertools.product((G, GT), repeat=p):
        flipped = tuple(swap[x] for x in eps)
        assert predicted_transpose_cumulants(eps) == predicted_transpose_cumulants(flipped)
        assert predicted_transpose_cumulants(eps, "shift") == predicted_transpose_cumulants(flipped, "shift")


def test_prediction_rules_agree_to_length_6():
    for p in range(1, 7):
        for eps in itertools.product((G, GT), repeat=p):
            assert predicted_transpose_cumulants(eps) == predicted_transpose_cumulants(eps, "shift")
    with pytest.raises(ValueError):
        predicted_transpose_cumulants((G, GT), "other")


def test_json_round_trip():
    ct = transpose_cumulant_table(4)
    ct.kappa[(G, G, G)] = F(1, 3)
    back = CumulantTable.from_json(ct.to_json())
    assert back.degree == 4 and back.alphabet == ct.alphabet
    assert back.kappa == ct.kappa and back.kappa_prime == ct.kappa_prime


def free_law(degree=5):
    al = ("a", "b")
    kap, kp = {}, {}
    for w in words_up_to(al, degree):
        mixed = len(set(w)) > 1
        kap[w] = 0 if mixed else F(len(w) % 3 + 1, 2)
        kp[w] = 0 if mixed else F(len(w) + 1, 3)
    return cumulants_to_moments(CumulantTable(al, degree, kap, kp))


def test_freeness_by_construction():
    law = free_law()
    rep = check_infinitesimal_freeness(law, {"a": 0, "b": 1})
    assert rep.is_free
    assert rep.checked_words == 2 ** 2 + 2 ** 3 + 2 ** 4 + 2 ** 5 - 8


def test_same_tag_means_nothing_is_mixed():
    rep = check_infinitesimal_freeness(free_law(4), {"a": 0, "b": 0})
    assert rep.is_free and rep.checked_words == 0


def test_transpose_law_is_not_free():
    law = cumulants_to_moments(transpose_cumulant_table(4))
    rep = check_infinitesimal_freeness(law, {G: 0, GT: 1})
    flagged = {(v.word, v.quantity) for v in rep.violations}
    assert ((G, GT), "kappa_prime") in flagged
    assert not any(q == "kappa" for _, q in flagged)
    assert rep.alternating_violations


def test_random_permutation_law_is_free():
    phi = free_reference_phi(4)
    law = InfinitesimalLaw(("g", "s", "s*", "t", "t*"), phi, dict.fromkeys(phi, 0))
    tags = {"g": 0, "s": 1, "s*": 1, "t": 2, "t*": 2}
    rep = check_infinitesimal_freeness(law, tags)
    assert rep.is_free


def test_circular_moments():
    phi = free_reference_phi(4)
    assert phi[("s", "s*")] == 1
    assert phi[("s", "s")] == 0
    assert phi[("s", "s*", "s", "s*")] == 2


def test_missing_tag():
    with pytest.raises(ValueError):
        check_infinitesimal_freeness(free_law(3), {"a": 0})


def test_uncertain_law_threshold():
    phi = {("a",): 0.0, ("b",): 0.0, ("a", "b"): 0.05, ("b", "a"): 0.05, ("a", "a"): 1.0, ("b", "b"): 1.0}
    zeros = dict.fromkeys(phi, 0.0)
    loose = InfinitesimalLaw(("a", "b"), phi, zeros, phi_err=dict.fromkeys(phi, 0.02))
    tight = InfinitesimalLaw(("a", "b"), phi, zeros, phi_err=dict.fromkeys(phi, 0.01))
    tags = {"a": 0, "b": 1}
    assert check_infinitesimal_freeness(loose, tags).is_free
    assert {v.word for v in check_infinitesimal_freeness(tight, tags).violations} == {("a", "b"), ("b", "a")}


@pytest.mark.parametrize("elems", [
    (("a",), ("b",), ("a",)),
    (("a", "a"), ("b",), ("a",)),
    (("a",), ("b", "b"), ("a",)),
    (("a",), ("b",), ("a",), ("b",), ("a",)),
])
def test_odd_alternating_closed_form(elems):
    law = free_law()
    centers = [law.phi[e] for e in elems]
    direct = centered_product_moment(law.phi, elems, centers, law.phi_prime)
    assert odd_alternating_phi_prime(law, list(elems), {"a": 0, "b": 1}) == direct


def test_even_alternating_phi_prime_vanishes():
    law = free_law()
    elems = [("a",), ("b",), ("a",), ("b",)]
    assert odd_alternating_phi_prime(law, elems, {"a": 0, "b": 1}) == 0


def rational():
    return st.fractions(min_value=-3, max_value=3, max_denominator=7)


def random_table(alphabet, degree, data):
    words = list(words_up_to(alphabet, degree))
    kap = {w: data.draw(rational()) for w in words}
    kp = {w: data.draw(rational()) for w in words}
    return CumulantTable(alphabet, degree, kap, kp)


@settings(max_examples=5, deadline=None)
@given(st.data())
def test_round_trip_two_letters_degree_6(data):
    ct = random_table(("a", "b"), 6, data)
    back = moments_to_cumulants(cumulants_to_moments(ct))
    assert back.kappa == ct.kappa and back.kappa_prime == ct.kappa_prime


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_round_trip_moments_first(data):
    al = ("a", "b", "c")
    words = list(words_up_to(al, 4))
    law = InfinitesimalLaw(al, {w: data.draw(rational()) for w in words},
                           {w: data.draw(rational()) for w in words})
    again = cumulants_to_moments(moments_to_cumulants(law))
    assert again.phi == law.phi and again.phi_prime == law.phi_prime


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_zero_phi_prime_gives_zero_kappa_prime(data):
    al = ("a", "b")
    words = list(words_up_to(al, 5))
    law = InfinitesimalLaw(al, {w: data.draw(rational()) for w in words}, dict.fromkeys(words, 0))
    assert all(v == 0 for v in moments_to_cumulants(law).kappa_prime.values())


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_partial_is_first_order_term(data):
    n = data.draw(st.integers(1, 6))
    p = data.draw(st.sampled_from(enumerate_nc(n)))
    word = tuple(data.draw(st.sampled_from("ab")) for _ in range(n))
    ct = random_table(("a", "b"), n, data)
    t = F(1, 10 ** 9)
    shifted = {w: ct.kappa[w] + t * ct.kappa_prime[w] for w in ct.kappa}
    slope = (eval_f_pi(shifted, p, word) - eval_f_pi(ct.kappa, p, word)) / t
    d = eval_partial_f_pi(ct.kappa, ct.kappa_prime, p, word)
    assert abs(slope - d) <= t * 10 ** 5


@settings(max_examples=10, deadline=None)
@given(st.data())
def test_zeroed_mixed_cumulants_are_free(data):
    al = ("a", "b", "c")
    tags = {"a": 0, "b": 0, "c": 1}
    ct = random_table(al, 4, data)
    for w in list(ct.kappa):
        if len({tags[x] for x in w}) > 1:
            ct.kappa[w] = ct.kappa_prime[w] = 0
    assert check_infinitesimal_freeness(cumulants_to_moments(ct), tags).is_free


def test_semicircular_family_table_defaults():
    ct = semicircular_family_table(("x", "y"), {("x", "y"): 2}, 3)
    assert ct.kappa[("x", "y")] == 2 and ct.kappa[("y", "x")] == 0
    assert all(v == 0 for v in ct.kappa_prime.values())
