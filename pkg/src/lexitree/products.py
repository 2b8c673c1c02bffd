"""Generalised lexicographic products M[N_a] and their s-expansion.

Elements of a product are numbered by the lexicographic pairing of
(outer index, inner index); ``Structure.labels`` of the result holds the
pair for every element.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as cartesian
from typing import Sequence

from .errors import StructureError
from .search import find_isomorphism
from .structures import Signature, Structure, expand, full_relation, is_isomorphism, reorder_signature


@dataclass(frozen=True)
class ProductSpec:
    outer: Structure
    inner: tuple[Structure, ...]
    s_symbol: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "inner", tuple(self.inner))
        if len(self.inner) != self.outer.size:
            raise StructureError(
                f"inner map has {len(self.inner)} entries, outer universe has {self.outer.size}")
        for a, N in enumerate(self.inner):
            if N.signature.relations != self.outer.signature.relations:
                raise StructureError(f"signature mismatch between outer and inner structure at {a}")
        if self.s_symbol is not None and self.s_symbol in self.outer.signature:
            raise StructureError(f"s symbol {self.s_symbol!r} already in the signature")

    @classmethod
    def constant(cls, outer: Structure, inner: Structure, s_symbol: str | None = None) -> ProductSpec:
        return cls(outer, (inner,) * outer.size, s_symbol)


def lex_product(spec: ProductSpec) -> Structure:
    M, inner = spec.outer, spec.inner
    pairs = [(a, b) for a in M.universe for b in inner[a].universe]
    index = {p: i for i, p in enumerate(pairs)}
    tables: dict[str, list[tuple[int, ...]]] = {}
    for sym, k in M.signature.relations:
        rows = []
        # inside one block: the inner structure decides
        for a, N in enumerate(inner):
            for t in N.tables[sym]:
                rows.append(tuple(index[(a, b)] for b in t))
        # first coordinates not all equal: the outer structure decides
        for t in M.tables[sym]:
            if len(set(t)) == 1:
                continue
            for bs in cartesian(*(inner[a].universe for a in t)):
                rows.append(tuple(index[(a, b)] for a, b in zip(t, bs)))
        tables[sym] = rows
    sig = M.signature
    if spec.s_symbol is not None:
        sig = sig.extend([(spec.s_symbol, 2)])
        tables[spec.s_symbol] = [
            (index[(a, b1)], index[(a, b2)])
            for a in M.universe for b1 in inner[a].universe for b2 in inner[a].universe
        ]
    return Structure(sig, len(pairs), tables, labels=pairs, origin=spec)


def lex_power(M: Structure, N: Structure, s_symbol: str | None = None) -> Structure:
    """M[N] (or M[N]^s), the product with constant inner structure."""
    return lex_product(ProductSpec.constant(M, N, s_symbol))


def singleton(signature: Signature) -> Structure:
    return Structure(signature, 1, {}, name="I")


def blocks(P: Structure) -> list[list[int]]:
    """Elements of a product grouped by outer coordinate."""
    out: dict = {}
    for i, (a, _) in enumerate(P.labels):
        out.setdefault(a, []).append(i)
    return [out[a] for a in sorted(out)]


def quotient(P: Structure, s_symbol: str) -> Structure:
    """Collapse the s-classes of P; relations come from tuples across classes."""
    classes: list[list[int]] = []
    cls_of: dict[int, int] = {}
    for e in P.universe:
        if e in cls_of:
            continue
        members = sorted(f for f in P.universe if (e, f) in P.tables[s_symbol])
        for f in members:
            cls_of[f] = len(classes)
        classes.append(members)
    sig = P.signature.restrict([s for s in P.signature.symbols if s != s_symbol])
    tables = {}
    for sym in sig.symbols:
        tables[sym] = {
            tuple(cls_of[v] for v in t) for t in P.tables[sym] if len({cls_of[v] for v in t}) > 1
        }
    return Structure(sig, len(classes), tables)


def mixed_clause_lint(spec: ProductSpec) -> list[tuple[str, tuple[int, ...]]]:
    """Outer tuples (arity >= 3) with repeated but not all-equal entries.

    These are evaluated by the outer clause verbatim; listing them makes the
    occurrences visible in reports.
    """
    out = []
    for sym, k in spec.outer.signature.relations:
        if k < 3:
            continue
        for t in spec.outer.table(sym):
            if 1 < len(set(t)) < k:
                out.append((sym, t))
    return out


@dataclass(frozen=True)
class AssociativityResult:
    isomorphic: bool
    witness: tuple[int, ...] | None
    left: Structure
    right: Structure
    canonical: bool


def check_associativity(M: Structure, N: Structure, P: Structure, s1: str = "s1",
                        s2: str = "s2", max_nodes: int | None = None) -> AssociativityResult:
    """Compare M[N[P]^s2]^s1 with (M[N]^s1)[P]^s2.

    On the left, M has to speak about s2: it is read as empty (two elements
    in different M-blocks are never s2-related). On the right, P has to speak
    about s1: it is read as full (one P-block lies in one M-block). The
    witness is the canonical map (a, (b, c)) -> ((a, b), c), verified.
    """
    if s1 == s2:
        raise StructureError("s1 and s2 must differ")
    NP = lex_power(N, P, s2)
    left = lex_power(expand(M, s2, 2, ()), NP, s1)
    MN = lex_power(M, N, s1)
    right = lex_power(MN, expand(P, s1, 2, full_relation(P.size)), s2)
    left = reorder_signature(left, right.signature)

    right_index = {}
    for i, (k, c) in enumerate(right.labels):
        a, b = MN.labels[k]
        right_index[(a, b, c)] = i
    witness = []
    for a, j in left.labels:
        b, c = NP.labels[j]
        witness.append(right_index[(a, b, c)])
    witness = tuple(witness)
    if is_isomorphism(left, right, witness):
        return AssociativityResult(True, witness, left, right, True)
    found = find_isomorphism(left, right, max_nodes=max_nodes)
    return AssociativityResult(found is not None, found, left, right, False)
