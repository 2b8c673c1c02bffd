"""Deterministic families of structures with coherent finite prefixes.

A generator maps n to a structure on 0..n-1 such that prefix(n) is the
induced substructure of prefix(n+1) on its first n elements.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .errors import StructureError
from .search import find_isomorphism
from .structures import EMPTY, GRAPH, ORDER, Signature, Structure, induced_substructure
from .tree import Branch, FamilyTree, default_sbar, tree_product, uniform_tree

KINDS = ("linear", "rado", "cycle", "complete", "blocks", "empty")


def _symmetric(pairs):
    return [(i, j) for i, j in pairs] + [(j, i) for i, j in pairs]


def rado_adjacent(i: int, j: int) -> bool:
    """i < j are adjacent iff bit i of j is set (bit 0 is the least significant)."""
    if i == j:
        return False
    i, j = min(i, j), max(i, j)
    return (j >> i) & 1 == 1


@dataclass(frozen=True)
class Generator:
    kind: str
    param: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructureError(f"unknown generator kind {self.kind!r}")
        if self.kind in ("cycle", "blocks"):
            if self.param is None or self.param < (3 if self.kind == "cycle" else 1):
                raise StructureError(f"{self.kind} needs a size parameter")

    @property
    def name(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param}"

    @property
    def signature(self) -> Signature:
        return {"linear": ORDER, "empty": EMPTY}.get(self.kind, GRAPH)

    def prefix(self, n: int) -> Structure:
        if n < 0:
            raise StructureError("prefix size must be non-negative")
        k = self.param
        pairs: list[tuple[int, int]]
        if self.kind == "linear":
            return Structure(ORDER, n, {"lt": list(combinations(range(n), 2))}, name=f"L{n}")
        if self.kind == "empty":
            return Structure(EMPTY, n, {}, name=f"I{n}")
        if self.kind == "rado":
            pairs = [(i, j) for i, j in combinations(range(n), 2) if rado_adjacent(i, j)]
        elif self.kind == "complete":
            pairs = list(combinations(range(n), 2))
        elif self.kind == "blocks":
            pairs = [(i, j) for i, j in combinations(range(n), 2) if i // k == j // k]
        else:
            if n > k:
                raise StructureError(f"cycle:{k} has no prefix of size {n}")
            pairs = [(i, i + 1) for i in range(n - 1)]
            if n == k:
                pairs.append((0, k - 1))
        return Structure(GRAPH, n, {"E": _symmetric(pairs)}, name=f"{self.name}[{n}]")


def parse_generator(text: str) -> Generator:
    """``linear``, ``rado``, ``complete``, ``empty``, ``cycle:K`` or ``blocks:K``."""
    m = re.fullmatch(r"([a-z]+)(?::(\d+))?", text.strip())
    if not m:
        raise StructureError(f"cannot parse generator {text!r}")
    return Generator(m.group(1), int(m.group(2)) if m.group(2) else None)


def cycle(k: int) -> Structure:
    return Generator("cycle", k).prefix(k)


def complete(n: int) -> Structure:
    return Generator("complete").prefix(n)


def empty_graph(n: int) -> Structure:
    return Structure(GRAPH, n, {"E": []}, name=f"E{n}")


def path(n: int) -> Structure:
    return Structure(GRAPH, n, {"E": _symmetric([(i, i + 1) for i in range(n - 1)])}, name=f"P{n}")


def linear(n: int) -> Structure:
    return Generator("linear").prefix(n)


def catalog_structure(name: str) -> Structure:
    """Named small structures: K3, E2, C5, P4 (graphs) and L3 (linear order)."""
    m = re.fullmatch(r"([KECPL])(\d+)", name)
    if not m:
        raise StructureError(f"unknown catalog entry {name!r}")
    letter, n = m.group(1), int(m.group(2))
    if letter == "C" and n < 3:
        raise StructureError("cycles need at least 3 vertices")
    build = {"K": complete, "E": empty_graph, "C": cycle, "P": path, "L": linear}[letter]
    return build(n).with_name(name)


def rado_extension_witness(M: Structure, yes: Sequence[int], no: Sequence[int]) -> int | None:
    """Least vertex outside yes/no adjacent to all of ``yes`` and none of ``no``."""
    A, B = set(yes), set(no)
    for v in M.universe:
        if v in A or v in B:
            continue
        if all(M.holds("E", (v, a)) for a in A) and not any(M.holds("E", (v, b)) for b in B):
            return v
    return None


def induced_types(M: Structure, size: int) -> list[Structure]:
    """Isomorphism types of ``size``-element induced substructures, by first occurrence."""
    types: list[Structure] = []
    for A in combinations(range(M.size), size):
        S = induced_substructure(M, A)
        if not any(find_isomorphism(S, T) is not None for T in types):
            types.append(S.with_name(None))
    return types


# ---------------------------------------------------------------- dense samples

ORDERS = ("canonical", "rotated", "shuffled")


@dataclass
class DenseSampler:
    """Branch samples of the depth-d truncation of a pure template.

    ``levels[i]`` is the structure at every node of height i. In a finite
    truncation every leaf is a node, so a dense sample contains every
    branch; samplers differ in the order they emit them, which changes the
    element numbering of the induced product.
    """

    levels: Sequence[Structure]
    budget: int | None = None
    order: str = "canonical"
    seed: int = 0
    sbar: Sequence[str] | None = field(default=None)

    def __post_init__(self):
        if not self.levels:
            raise StructureError("a sampler needs at least one level")
        if self.order not in ORDERS:
            raise StructureError(f"unknown sample order {self.order!r}")

    @property
    def depth(self) -> int:
        return len(self.levels)


def dense_branch_sample(s: DenseSampler) -> tuple[FamilyTree, list[Branch]]:
    T = uniform_tree(s.levels)
    branches = T.branches()
    if s.budget is not None and s.budget < len(branches):
        raise StructureError(
            f"budget {s.budget} cannot cover the {len(branches)} leaves of the truncation")
    if s.order == "rotated" and branches:
        r = s.seed % len(branches) or 1
        branches = branches[r:] + branches[:r]
    elif s.order == "shuffled":
        branches = list(branches)
        random.Random(s.seed).shuffle(branches)
    return T, list(branches)


def is_dense(T: FamilyTree, branches: Sequence[Branch]) -> bool:
    covered = {t for b in branches for t in b}
    return covered >= set(T.nodes)


def sample_product(T: FamilyTree, branches: Sequence[Branch], sbar: Sequence[str] | None = None) -> Structure:
    """Induced substructure of the tree product on ``branches``, numbered in sample order."""
    P = tree_product(T, default_sbar(T) if sbar is None else sbar)
    index = {b: i for i, b in enumerate(P.labels)}
    elems = [index[tuple(b)] for b in branches]
    if len(set(elems)) != len(elems):
        raise StructureError("sample repeats a branch")
    pos = {e: i for i, e in enumerate(elems)}
    tables = {
        sym: [tuple(pos[v] for v in t) for t in rows if all(v in pos for v in t)]
        for sym, rows in P.tables.items()
    }
    return Structure(P.signature, len(elems), tables,
                     labels=[P.labels[e] for e in elems], origin=P.origin)
