from __future__ import annotations

import pytest
from hypothesis import given, settings

from conftest import K, structures
from lexitree.dsl import parse_file, parse_structure, serialize
from lexitree.errors import DSLSyntaxError, StructureError


def test_parse_two_element_clique():
    M = parse_structure("structure K2: graph { universe 2; E = { (0,1),(1,0) } }")
    assert M.size == 2 and M.table("E") == [(0, 1), (1, 0)]
    assert M == K(2)


def test_parse_singleton_with_default_empty_table():
    M = parse_structure("structure E1: graph { universe 1; }")
    assert M.size == 1 and M.table("E") == []


def test_negative_universe_is_a_syntax_error():
    with pytest.raises(DSLSyntaxError) as info:
        parse_structure("structure X: graph { universe -1; }")
    assert info.value.line == 1 and info.value.column == 31


def test_custom_signature_and_comments():
    text = """
    # a ternary relation and a unary one
    signature tri { T/3; U/1; }
    structure A: tri {
      universe 3;
      T = { (0,1,2) };
      U = { (1) };
    }
    """
    M = parse_structure(text)
    assert M.table("T") == [(0, 1, 2)] and M.table("U") == [(1,)]


@pytest.mark.parametrize("text, fragment, line", [
    ("structure A: graph {\n universe 2;\n E = { (0,1,1) };\n}", "arity mismatch", 3),
    ("structure A: graph {\n universe 2;\n E = { (0,5) };\n}", "out of range", 3),
    ("signature s { R/1; R/2; }", "duplicate relation symbol", 1),
    ("structure A: graph {\n universe 2;\n E = {};\n E = {};\n}", "duplicate relation symbol", 4),
    ("structure A: nosuch { universe 1; }", "unknown signature", 1),
    ("structure A: graph { universe 1; F = {}; }", "not in signature", 1),
    ("structure A: graph { universe 1 }", "expected ';'", 1),
    ("structure A: graph { universe 1; } @", "unexpected character", 1),
])
def test_errors_carry_positions(text, fragment, line):
    with pytest.raises(DSLSyntaxError) as info:
        parse_file(text)
    assert fragment in str(info.value)
    assert info.value.line == line


def test_parse_structure_needs_exactly_one():
    with pytest.raises(StructureError):
        parse_structure("structure A: set { universe 1; } structure B: set { universe 2; }")


@settings(max_examples=80, deadline=None)
@given(structures(max_size=5))
def test_serialize_roundtrip(M):
    again = parse_structure(serialize(M, "M"))
    assert again == M


def test_serialize_builtin_signature_has_no_declaration():
    text = serialize(K(3), "K3")
    assert not text.startswith("signature")
    assert parse_structure(text) == K(3)
