"""Finite truncations of the rigid construction over b^{<d}.

Nodes are enumerated breadth-first (node 0 is the root). Node i carries a
cycle C_{3+i}; on b successors it is realised as one of the isomorphism
types of b-element induced subgraphs of that cycle, picked by the node's
position among its siblings. Every node structure is expanded by a binary
relation R that is full (off the diagonal) at even heights and empty at
odd heights, so for distinct branches R holds iff their meet has even
height. The agreement relations s_1..s_{d-1} are recovered from R alone by
the three schemas implemented in :func:`defined_agreement`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import BudgetExceeded, StructureError
from .generators import complete, cycle, induced_types
from .search import find_isomorphism, stabilizer_chain
from .structures import GRAPH, Signature, Structure, induced_substructure, is_isomorphism, reduct
from .tree import FamilyTree, TreeOrigin, default_sbar, meet_height, tree_from_function, tree_product

RIGID_SIGNATURE = Signature("rigid", (("E", 2), ("R", 2)))
CATALOGS = ("cycles", "pure")
DEFAULT_MAX_ELEMENTS = 27


@dataclass(frozen=True)
class RigidSpec:
    depth: int
    branching: int
    catalog: str = "cycles"
    max_elements: int = DEFAULT_MAX_ELEMENTS

    def __post_init__(self):
        if self.depth < 2:
            raise StructureError("depth must be at least 2")
        if self.branching < 2:
            raise StructureError("branching must be at least 2")
        if self.catalog not in CATALOGS:
            raise StructureError(f"unknown catalog {self.catalog!r}")
        if self.size > self.max_elements:
            raise BudgetExceeded(
                f"{self.branching}^{self.depth} = {self.size} elements exceed the budget {self.max_elements}")

    @property
    def size(self) -> int:
        return self.branching ** self.depth


def bfs_index(path: tuple[int, ...], b: int) -> int:
    """Breadth-first position of the node reached by ``path`` in b^{<d}."""
    offset = sum(b ** level for level in range(len(path)))
    rank = 0
    for p in path:
        rank = rank * b + p
    return offset + rank


@lru_cache(maxsize=None)
def _cycle_types(k: int, b: int) -> tuple[Structure, ...]:
    if b > k:
        raise StructureError(f"catalog too small: C{k} has no {b}-element substructure")
    return tuple(induced_types(cycle(k), b))


def catalog_graph(spec: RigidSpec, path: tuple[int, ...]) -> Structure:
    """The graph placed on the successors of the node at ``path``."""
    b = spec.branching
    if spec.catalog == "pure":
        return cycle(b) if b >= 3 else complete(b)
    k = 3 + bfs_index(path, b)
    types = _cycle_types(k, b)
    pos = path[-1] if path else 0
    return types[pos % len(types)]


def _with_parity(G: Structure, height: int) -> Structure:
    n = G.size
    R = [(x, y) for x in range(n) for y in range(n) if x != y] if height % 2 == 0 else []
    return Structure(RIGID_SIGNATURE, n, {"E": G.tables["E"], "R": R})


def rigid_tree(spec: RigidSpec) -> FamilyTree:
    return tree_from_function(spec.depth, lambda path: _with_parity(catalog_graph(spec, path), len(path)))


def sibling_report(T: FamilyTree) -> list[tuple[str, str]]:
    """Pairs of sibling internal nodes whose structures are isomorphic."""
    clashes = []
    for t in T.internal():
        kids = [c for c in T.children(t) if not T.is_leaf(c)]
        for a, c in combinations(kids, 2):
            if find_isomorphism(T.structure(a), T.structure(c)) is not None:
                clashes.append((a, c))
    return clashes


def build_rigid_truncation(spec: RigidSpec) -> Structure:
    """Tree product over the truncation with E, R and s_1..s_{d-1} materialised.

    With the cycle catalog, sibling structures must be pairwise
    non-isomorphic; otherwise the spec is rejected.
    """
    T = rigid_tree(spec)
    if spec.catalog == "cycles":
        clashes = sibling_report(T)
        if clashes:
            raise StructureError(f"catalog realisation gives isomorphic siblings: {clashes[:3]}")
    P = tree_product(T, default_sbar(T))
    return P.with_name(f"rigid_d{spec.depth}_b{spec.branching}_{spec.catalog}")


def _depth_of(P: Structure) -> int:
    if not isinstance(P.origin, TreeOrigin):
        raise StructureError("structure does not come from a tree product")
    return P.origin.tree.height


def schema_shape(i: int) -> str:
    if i < 1:
        raise StructureError("schema index starts at 1")
    return "base" if i == 1 else ("even-step" if i % 2 == 0 else "odd-step")


def defined_agreement(R: np.ndarray, i: int) -> np.ndarray:
    """s_i as defined from R alone, chaining the previously defined s_{i-1}."""
    R = R.astype(bool)
    notR = ~R
    some = lambda A, B: (A.astype(np.int64) @ B.T.astype(np.int64)) > 0
    # s_1(x,y) <-> not R(x,y) or exists z (not R(x,z) and not R(y,z))
    s = notR | some(notR, notR)
    for j in range(2, i + 1):
        if j % 2 == 0:
            s = s & (R | some(s & R, R))
        else:
            s = s & (notR | some(s & notR, notR))
    return s


@dataclass
class DefinabilityResult:
    index: int
    shape: str
    holds: bool
    mismatches: list[tuple[int, int, bool, bool]]
    boundary: bool

    def to_json(self) -> dict:
        return {"index": self.index, "shape": self.shape, "holds": self.holds,
                "boundary": self.boundary,
                "mismatches": [list(m) for m in self.mismatches]}


def verify_s_definability(P: Structure, i: int, R_symbol: str = "R") -> DefinabilityResult:
    """Compare the R-defined s_i with the materialised table, pair by pair."""
    d = _depth_of(P)
    if not 1 <= i < d:
        raise StructureError(f"index must lie in 1..{d - 1}")
    sbar = P.origin.sbar
    defined = defined_agreement(P.matrix(R_symbol), i)
    actual = P.matrix(sbar[i - 1])
    bad = np.argwhere(defined != actual)
    mismatches = [(int(x), int(y), bool(defined[x, y]), bool(actual[x, y])) for x, y in bad]
    return DefinabilityResult(i, schema_shape(i), not mismatches, mismatches, d < i + 2)


def parity_violations(P: Structure, R_symbol: str = "R") -> list[tuple[int, int]]:
    """Pairs where R disagrees with 'distinct and meeting at even height'."""
    out = []
    for x in P.universe:
        for y in P.universe:
            want = x != y and meet_height(P.labels[x], P.labels[y]) % 2 == 0
            if P.holds(R_symbol, (x, y)) != want:
                out.append((x, y))
    return out


@dataclass
class RigidityReport:
    automorphisms: int
    class_matrices: dict[int, list[list[bool]]]
    classes_distinct: dict[int, bool]
    siblings_distinct: bool
    reduct_same_group: bool
    reduct_automorphisms: int
    tree_action_trivial: bool
    deepest_level_order: int
    generators: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def all_classes_distinct(self) -> bool:
        return all(self.classes_distinct.values())

    @property
    def implication_holds(self) -> bool:
        """Pairwise non-isomorphic classes at every level force a trivial group."""
        return not self.all_classes_distinct or self.automorphisms == 1

    @property
    def rigid(self) -> bool:
        return self.automorphisms == 1

    def to_json(self) -> dict:
        return {
            "automorphisms": self.automorphisms,
            "rigid": self.rigid,
            "classes_distinct": {str(i): v for i, v in self.classes_distinct.items()},
            "implication_holds": self.implication_holds,
            "siblings_distinct": self.siblings_distinct,
            "tree_action_trivial": self.tree_action_trivial,
            "deepest_level_order": self.deepest_level_order,
            "reduct_automorphisms": self.reduct_automorphisms,
            "reduct_same_group": self.reduct_same_group,
            "class_matrices": {str(i): m for i, m in self.class_matrices.items()},
        }


def agreement_classes(P: Structure, i: int) -> list[list[int]]:
    groups: dict[str, list[int]] = {}
    for e, b in enumerate(P.labels):
        groups.setdefault(b[i], []).append(e)
    return list(groups.values())


def rigidity_report(P: Structure, base_symbols: tuple[str, ...] = ("E", "R"),
                    max_size: int | None = None) -> RigidityReport:
    """|Aut(P)|, per-level class isomorphism matrices and the reduct comparison.

    Classes at level i are the s_i-classes, compared over the base symbols
    together with the deeper agreement relations.
    """
    d = _depth_of(P)
    T: FamilyTree = P.origin.tree
    sbar = P.origin.sbar
    chain = stabilizer_chain(P, max_size=max_size)
    gens = chain.generators
    matrices, distinct = {}, {}
    for i in range(1, d):
        keep = list(base_symbols) + list(sbar[i:])
        classes = [induced_substructure(reduct(P, keep), c) for c in agreement_classes(P, i)]
        m = [[find_isomorphism(A, B) is not None for B in classes] for A in classes]
        matrices[i] = m
        distinct[i] = all(not m[x][y] for x in range(len(m)) for y in range(len(m)) if x != y)
    siblings = not sibling_report(T)
    R0 = reduct(P, base_symbols)
    rchain = stabilizer_chain(R0, max_size=max_size)
    same = chain.order == rchain.order and all(is_isomorphism(P, P, g) for g in rchain.generators) \
        and all(is_isomorphism(R0, R0, g) for g in gens)
    deepest = {e: P.labels[e][d - 1] for e in P.universe}
    trivial = all(deepest[g[e]] == deepest[e] for g in gens for e in P.universe)
    bottom = 1
    for t in T.level(d - 1):
        bottom *= stabilizer_chain(T.structure(t)).order
    return RigidityReport(chain.order, matrices, distinct, siblings, same, rchain.order,
                          trivial, bottom, gens)
