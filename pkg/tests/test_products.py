from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E, K, structures
from lexitree.errors import StructureError
from lexitree.indivisibility import product_indivisibility_check
from lexitree.generators import linear
from lexitree.products import (
    ProductSpec,
    blocks,
    check_associativity,
    lex_power,
    lex_product,
    mixed_clause_lint,
    quotient,
    singleton,
)
from lexitree.search import find_isomorphism
from lexitree.structures import GRAPH, Signature, Structure, induced_substructure, is_isomorphism, reduct
from oracles import brute_lex_product, random_signature, random_structure


def test_edgeless_outer_clique_inner():
    P = lex_power(E(2), K(2))
    assert P.size == 4
    assert P.table("E") == [(0, 1), (1, 0), (2, 3), (3, 2)]


def test_clique_outer_edgeless_inner_is_complete_bipartite():
    P = lex_power(K(2), E(2))
    expected = sorted({(a, b) for a in (0, 1) for b in (2, 3)} | {(b, a) for a in (0, 1) for b in (2, 3)})
    assert P.table("E") == expected
    assert P == brute_lex_product(K(2), [E(2), E(2)])


def test_s_relation_marks_blocks():
    P = lex_power(E(2), K(2), "s")
    assert P.table("s") == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)]


def test_clique_power_is_clique():
    assert find_isomorphism(lex_power(K(2), K(2)), K(4)) is not None


@settings(max_examples=30, deadline=None)
@given(structures(max_size=4, max_arity=3))
def test_singleton_absorbs_on_both_sides(M):
    I = singleton(M.signature)
    assert find_isomorphism(lex_power(I, M), M) is not None
    # outer facts on constant tuples are decided by the inner clause, so the
    # outer side absorbs I exactly when M has none
    constant = any(len(set(t)) == 1 for s in M.signature.symbols for t in M.table(s))
    assert (find_isomorphism(lex_power(M, I), M) is not None) == (not constant)


def test_spec_validation():
    with pytest.raises(StructureError):
        ProductSpec(K(2), (K(2),))
    other = Structure(Signature("o", (("lt", 2),)), 2, {"lt": []})
    with pytest.raises(StructureError):
        ProductSpec(K(2), (K(2), other))
    with pytest.raises(StructureError):
        ProductSpec(K(2), (K(2), K(2)), "E")


def test_empty_factor_gives_empty_product():
    assert lex_power(E(0), K(3)).size == 0
    assert lex_power(K(3), E(0)).size == 0


def test_labels_follow_lexicographic_pairing():
    P = lex_product(ProductSpec(K(2), (K(1), K(3))))
    assert list(P.labels) == [(0, 0), (1, 0), (1, 1), (1, 2)]
    assert blocks(P) == [[0], [1, 2, 3]]


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_agrees_with_clause_evaluator(rnd):
    sig = random_signature(rnd)
    outer = random_structure(rnd, sig, rnd.randint(0, 3))
    inner = [random_structure(rnd, sig, rnd.randint(0, 3)) for _ in range(outer.size)]
    assert lex_product(ProductSpec(outer, tuple(inner), "s")) == brute_lex_product(outer, inner, "s")


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_block_structure_quotient_and_classes(rnd):
    sig = Signature("g", (("E", 2), ("T", 3)))
    outer = random_structure(rnd, sig, rnd.randint(1, 4))
    inner = [random_structure(rnd, sig, rnd.randint(1, 3)) for _ in range(outer.size)]
    P = lex_product(ProductSpec(outer, tuple(inner), "s"))
    s = set(P.table("s"))
    # s is an equivalence whose classes are the blocks
    for x in P.universe:
        assert (x, x) in s
        for y in P.universe:
            assert ((x, y) in s) == (P.labels[x][0] == P.labels[y][0])
    assert find_isomorphism(quotient(P, "s"), _drop_diagonal_facts(outer)) is not None
    for a, block in enumerate(blocks(P)):
        cls = reduct(induced_substructure(P, block), sig.symbols)
        assert find_isomorphism(cls, inner[a]) is not None


def _drop_diagonal_facts(M):
    return Structure(M.signature, M.size, {s: [t for t in M.table(s) if len(set(t)) > 1]
                                           for s in M.signature.symbols})


def test_mixed_clause_lint_lists_repeated_outer_tuples():
    sig = Signature("t", (("T", 3),))
    outer = Structure(sig, 2, {"T": [(0, 0, 1), (0, 1, 1), (0, 0, 0)]})
    spec = ProductSpec.constant(outer, Structure(sig, 1, {"T": []}))
    assert mixed_clause_lint(spec) == [("T", (0, 0, 1)), ("T", (0, 1, 1))]


@pytest.mark.parametrize("M,N,Pf", [
    (E(2), E(2), E(2)),
    (K(2), E(2), K(2)),
    (K(1), K(3), E(2)),
    (K(3), E(2), K(1)),
])
def test_associativity_examples(M, N, Pf):
    r = check_associativity(M, N, Pf)
    assert r.isomorphic and r.canonical
    assert is_isomorphism(r.left, r.right, r.witness)
    # an independent search agrees
    assert find_isomorphism(r.left, r.right) is not None


def test_linear_orders_product_indivisibility():
    rep = product_indivisibility_check(linear(3), linear(3), linear(2), linear(2))
    assert rep.outer_hypothesis and rep.inner_hypothesis and rep.conclusion


def test_associativity_with_random_factors():
    rng = random.Random(7)
    for _ in range(10):
        M, N, Pf = (random_structure(rng, GRAPH, rng.randint(1, 3)) for _ in range(3))
        assert check_associativity(M, N, Pf).canonical
