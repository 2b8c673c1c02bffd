from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import K, P, brute_partial_iso, structures
from lexitree.errors import StructureError
from lexitree.structures import (
    GRAPH,
    PartialIso,
    Signature,
    Structure,
    expand,
    induced_substructure,
    is_isomorphism,
    is_partial_iso,
    reduct,
    to_dot,
)


def test_signature_rejects_duplicates_and_bad_arity():
    with pytest.raises(StructureError):
        Signature("x", (("R", 2), ("R", 1)))
    with pytest.raises(StructureError):
        Signature("x", (("R", 0),))


def test_structure_rejects_out_of_range_and_wrong_arity():
    with pytest.raises(StructureError):
        Structure(GRAPH, 2, {"E": [(0, 2)]})
    with pytest.raises(StructureError):
        Structure(GRAPH, 2, {"E": [(0,)]})


def test_tables_are_sorted_and_deduplicated():
    M = Structure(GRAPH, 3, {"E": [(2, 1), (0, 1), (2, 1)]})
    assert M.table("E") == [(0, 1), (2, 1)]


def test_equality_ignores_table_order():
    A = Structure(GRAPH, 2, {"E": [(1, 0), (0, 1)]})
    B = Structure(GRAPH, 2, {"E": [(0, 1), (1, 0)]})
    assert A == B and hash(A) == hash(B)


def test_matrix_mirrors_binary_table():
    M = P(3)
    assert np.array_equal(M.matrix("E"), np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=bool))


def test_induced_substructure_examples():
    assert induced_substructure(K(3), [0, 2]) == K(2)
    assert induced_substructure(P(3), [0, 2]).table("E") == []
    M = P(4)
    assert induced_substructure(M, M.universe) == M
    with pytest.raises(StructureError):
        induced_substructure(M, [7])


def test_reduct_examples():
    M = expand(K(2), "s", 2, [(0, 0), (1, 1)])
    assert reduct(M, ["E"]) == K(2)
    assert reduct(M, ["E", "s"]) == M
    bare = reduct(M, [])
    assert bare.size == 2 and bare.signature.relations == ()
    with pytest.raises(StructureError):
        reduct(M, ["nope"])


def test_partial_iso_validity_is_checked():
    M = P(3)
    assert PartialIso(M, M, ((0, 2), (1, 1))).is_valid()
    assert not PartialIso(M, M, ((0, 1), (1, 0), (2, 2))).is_valid()
    with pytest.raises(StructureError):
        PartialIso(M, M, ((0, 1), (1, 1)))


@settings(max_examples=60, deadline=None)
@given(structures(max_size=4))
def test_partial_iso_agrees_with_bruteforce(M):
    import itertools

    for m in range(min(M.size, 3) + 1):
        for A in itertools.combinations(range(M.size), m):
            for B in itertools.permutations(range(M.size), m):
                f = dict(zip(A, B))
                assert is_partial_iso(M, M, f) == brute_partial_iso(M, M, f)


@settings(max_examples=60, deadline=None)
@given(structures(max_size=5))
def test_json_roundtrip(M):
    again = Structure.from_json(json.loads(M.dumps()))
    assert again == M


@settings(max_examples=40, deadline=None)
@given(structures(max_size=5))
def test_relabel_is_an_isomorphism(M):
    perm = list(reversed(range(M.size)))
    assert is_isomorphism(M, M.relabel(perm), perm)


def test_empty_universe_is_allowed():
    M = Structure(GRAPH, 0, {})
    assert M.size == 0 and M.table("E") == []


def test_dot_export_lists_edges():
    dot = to_dot(P(3))
    assert "0 -> 1" in dot and "2 -> 1" in dot
