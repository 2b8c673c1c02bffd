"""Finite Hausdorff trees carrying structures, and their tree products.

Node ids are strings. The children of a node are ordered by creation
order, and the structure at an internal node is indexed by that order.
Heights are finite: the root has height 0 and a tree of height h has all
its leaves at height h (the tree product requires this).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product as cartesian
from typing import Any, Callable, Iterable, Mapping, Sequence

from .errors import PreconditionError, StructureError, TreeError
from .products import ProductSpec, lex_product
from .structures import (
    Signature,
    Structure,
    expand,
    full_relation,
    is_isomorphism,
    reorder_signature,
)

Branch = tuple[str, ...]


class FamilyTree:
    """A finite rooted tree with a structure on suc(t) at every internal node t."""

    def __init__(self, parent: Mapping[str, str | None], structures: Mapping[str, Structure]):
        self._parent: dict[str, str | None] = {str(k): (None if v is None else str(v))
                                               for k, v in parent.items()}
        self._children: dict[str, list[str]] = {t: [] for t in self._parent}
        roots = []
        for t, p in self._parent.items():
            if p is None:
                roots.append(t)
            elif p not in self._parent:
                raise TreeError(f"node {t!r} has unknown parent {p!r}")
            else:
                self._children[p].append(t)
        if len(roots) != 1:
            raise TreeError(f"a tree needs exactly one root, found {len(roots)}")
        self.root = roots[0]
        self._depth: dict[str, int] = {}
        stack = [(self.root, 0)]
        while stack:
            t, d = stack.pop()
            self._depth[t] = d
            stack.extend((c, d + 1) for c in self._children[t])
        if len(self._depth) != len(self._parent):
            raise TreeError("parent map contains a cycle")
        self._structures: dict[str, Structure] = {}
        sig = None
        for t in self._parent:
            kids = self._children[t]
            if not kids:
                continue
            if t not in structures:
                raise TreeError(f"internal node {t!r} has no structure")
            M = structures[t]
            if M.size != len(kids):
                raise TreeError(f"structure at {t!r} has {M.size} elements but the node has {len(kids)} children")
            if sig is None:
                sig = M.signature
            elif M.signature.relations != sig.relations:
                raise TreeError(f"structure at {t!r} uses a different signature")
            self._structures[t] = M
        self.signature: Signature | None = sig

    # -- basic notation

    @property
    def nodes(self) -> list[str]:
        return list(self._parent)

    def __contains__(self, t) -> bool:
        return t in self._parent

    def __len__(self):
        return len(self._parent)

    def _check(self, t: str):
        if t not in self._parent:
            raise TreeError(f"unknown node {t!r}")

    def parent(self, t: str) -> str | None:
        self._check(t)
        return self._parent[t]

    def children(self, t: str) -> list[str]:
        """suc(t), in child order."""
        self._check(t)
        return list(self._children[t])

    def structure(self, t: str) -> Structure:
        self._check(t)
        if t not in self._structures:
            raise TreeError(f"{t!r} is a leaf and carries no structure")
        return self._structures[t]

    def node_height(self, t: str) -> int:
        self._check(t)
        return self._depth[t]

    @property
    def height(self) -> int:
        return max(self._depth.values())

    def is_leaf(self, t: str) -> bool:
        self._check(t)
        return not self._children[t]

    def leaves(self) -> list[str]:
        return [t for t in self.nodes if not self._children[t]]

    def internal(self) -> list[str]:
        return [t for t in self.nodes if self._children[t]]

    def twig(self) -> list[str]:
        """Internal nodes all of whose successors are leaves."""
        return [t for t in self.internal() if all(self.is_leaf(c) for c in self._children[t])]

    def is_leveled(self) -> bool:
        return len({self._depth[t] for t in self.leaves()}) == 1

    def path(self, t: str) -> Branch:
        self._check(t)
        out = []
        while t is not None:
            out.append(t)
            t = self._parent[t]
        return tuple(reversed(out))

    def level(self, alpha: int) -> list[str]:
        """Nodes of height alpha in depth-first child order."""
        return list(dict.fromkeys(b[alpha] for b in self.branches() if len(b) > alpha))

    def meet(self, a: str, b: str) -> str:
        """The deepest common ancestor of two nodes."""
        pa, pb = self.path(a), self.path(b)
        m = pa[0]
        for x, y in zip(pa, pb):
            if x != y:
                break
            m = x
        return m

    def _walk(self, t: str) -> list[Branch]:
        out = []
        stack = [(t,)]
        while stack:
            b = stack.pop()
            kids = self._children[b[-1]]
            if not kids:
                out.append(b)
            else:
                stack.extend(b + (c,) for c in reversed(kids))
        return out

    def branches(self) -> list[Branch]:
        """Maximal chains root..leaf, in lexicographic child order."""
        return self._walk(self.root)

    # -- derived trees

    def restrict(self, alpha: int) -> FamilyTree:
        """T restricted to nodes of height <= alpha."""
        if not 0 <= alpha <= self.height:
            raise TreeError(f"alpha must lie in 0..{self.height}, got {alpha}")
        keep = {t: p for t, p in self._parent.items() if self._depth[t] <= alpha}
        structs = {t: M for t, M in self._structures.items() if self._depth[t] < alpha}
        return FamilyTree(keep, structs)

    def subtree_at(self, t: str) -> FamilyTree:
        """T_t, the nodes above or equal to t."""
        self._check(t)
        keep = {}
        for b in self._walk(t):
            for i, u in enumerate(b):
                keep[u] = None if i == 0 else b[i - 1]
        ordered = {u: keep[u] for u in self._parent if u in keep}
        structs = {u: M for u, M in self._structures.items() if u in keep}
        return FamilyTree(ordered, structs)

    def with_structures(self, structures: Mapping[str, Structure]) -> FamilyTree:
        return FamilyTree(self._parent, structures)

    def map_structures(self, fn: Callable[[str, Structure], Structure]) -> FamilyTree:
        return FamilyTree(self._parent, {t: fn(t, M) for t, M in self._structures.items()})

    # -- serialization

    def to_json(self, sbar: Sequence[str] | None = None) -> dict[str, Any]:
        nodes = []
        for t in self.nodes:
            entry: dict[str, Any] = {"id": t, "parent": self._parent[t]}
            if t in self._structures:
                entry["structure"] = self._structures[t].to_json()
            nodes.append(entry)
        out: dict[str, Any] = {"nodes": nodes}
        if sbar is not None:
            out["sbar"] = list(sbar)
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any],
                  resolve: Callable[[str], Structure] | None = None) -> tuple[FamilyTree, list[str] | None]:
        """Parse a tree file; ``structure`` entries may be JSON or a name."""
        parent: dict[str, str | None] = {}
        structures: dict[str, Structure] = {}
        local = {}
        for name, spec in (data.get("structures") or {}).items():
            local[name] = Structure.from_json(spec).with_name(name)
        for node in data["nodes"]:
            t = str(node["id"])
            if t in parent:
                raise TreeError(f"duplicate node id {t!r}")
            parent[t] = None if node.get("parent") is None else str(node["parent"])
            spec = node.get("structure")
            if spec is None:
                continue
            if isinstance(spec, str):
                if spec in local:
                    structures[t] = local[spec]
                elif resolve is not None:
                    structures[t] = resolve(spec)
                else:
                    raise TreeError(f"cannot resolve structure name {spec!r}")
            else:
                structures[t] = Structure.from_json(spec)
        sbar = data.get("sbar")
        return cls(parent, structures), (list(sbar) if sbar is not None else None)

    def dumps(self, sbar: Sequence[str] | None = None) -> str:
        return json.dumps(self.to_json(sbar))


def tree_from_function(depth: int, structure_at: Callable[[tuple[int, ...]], Structure]) -> FamilyTree:
    """Leveled tree of the given depth; node ids are ``r``, ``r.0``, ``r.0.1``, ...

    ``structure_at(path)`` gives the structure at the node reached by the
    child positions ``path``; its size is the branching there.
    """
    parent: dict[str, str | None] = {"r": None}
    structs: dict[str, Structure] = {}
    frontier = [((), "r")]
    for _ in range(depth):
        nxt = []
        for path, t in frontier:
            M = structure_at(path)
            structs[t] = M
            for i in range(M.size):
                c = f"{t}.{i}"
                parent[c] = t
                nxt.append((path + (i,), c))
        frontier = nxt
    return FamilyTree(parent, structs)


def uniform_tree(levels: Sequence[Structure]) -> FamilyTree:
    """Pure tree: every node at height i carries ``levels[i]``."""
    return tree_from_function(len(levels), lambda path: levels[len(path)])


def default_sbar(T: FamilyTree, prefix: str = "s") -> list[str]:
    return [f"{prefix}{i}" for i in range(1, T.height)]


def level_with_singletons(T: FamilyTree) -> FamilyTree:
    """Pad short branches with singleton structures until the tree is leveled."""
    if T.signature is None:
        raise TreeError("cannot pad a tree without structures")
    h = T.height
    parent = {t: T.parent(t) for t in T.nodes}
    structs = {t: T.structure(t) for t in T.internal()}
    one = Structure(T.signature, 1, {}, name="I")
    for leaf in T.leaves():
        t = leaf
        for i in range(h - T.node_height(leaf)):
            c = f"{leaf}~{i}"
            parent[c] = t
            structs[t] = one
            t = c
    return FamilyTree(parent, structs)


def meet_height(a: Branch, b: Branch) -> int:
    """Height of the meet of two branches; for a == b, the height of the branch."""
    h = 0
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i - 1
        h = i
    return h


def tuple_meet(branches: Sequence[Branch]) -> int:
    """Height of the node at which a tuple of branches is evaluated.

    For branches that are not all equal this is the height of their meet.
    A constant tuple (and every unary tuple) is evaluated at the last
    internal node of its branch, matching the inner clause of the
    lexicographic product.
    """
    first = branches[0]
    if all(b == first for b in branches):
        return len(first) - 2
    return min(meet_height(first, b) for b in branches[1:])


def successor_position(T: FamilyTree, branch: Branch, m: int) -> int:
    """Index of S_b(m) among the children of the node of height m on b."""
    return T.children(branch[m]).index(branch[m + 1])


@dataclass(frozen=True)
class TreeOrigin:
    tree: FamilyTree
    sbar: tuple[str, ...]


def _check_sbar(T: FamilyTree, sbar: Sequence[str]):
    if len(sbar) != T.height - 1:
        raise TreeError(f"sbar must have {T.height - 1} symbols for a tree of height {T.height}")
    if len(set(sbar)) != len(sbar):
        raise TreeError("sbar symbols must be distinct")
    for s in sbar:
        if T.signature is not None and s in T.signature:
            raise TreeError(f"sbar symbol {s!r} clashes with the signature")


def tree_product(T: FamilyTree, sbar: Sequence[str] | None = None) -> Structure:
    """The product over branch(T), expanded by the agreement relations in ``sbar``."""
    if T.height < 1:
        raise TreeError("the tree product needs height >= 1")
    if not T.is_leveled():
        raise TreeError("tree is not leveled (see level_with_singletons)")
    sbar = default_sbar(T) if sbar is None else list(sbar)
    _check_sbar(T, sbar)
    branches = T.branches()
    index = {b: i for i, b in enumerate(branches)}
    through: dict[str, list[Branch]] = {}
    for b in branches:
        for t in b:
            through.setdefault(t, []).append(b)
    sig = T.signature
    tables: dict[str, list[tuple[int, ...]]] = {s: [] for s in sig.symbols}
    for m in T.internal():
        M = T.structure(m)
        kids = T.children(m)
        for sym in sig.symbols:
            for t in M.tables[sym]:
                cs = [kids[i] for i in t]
                if len(set(cs)) == 1:
                    if T.is_leaf(cs[0]):
                        b = through[cs[0]][0]
                        tables[sym].append((index[b],) * len(t))
                    continue
                for bs in cartesian(*(through[c] for c in cs)):
                    tables[sym].append(tuple(index[b] for b in bs))
    for alpha, s in enumerate(sbar, start=1):
        groups: dict[str, list[int]] = {}
        for b in branches:
            groups.setdefault(b[alpha], []).append(index[b])
        tables[s] = [(x, y) for g in groups.values() for x in g for y in g]
    full_sig = sig.extend([(s, 2) for s in sbar])
    return Structure(full_sig, len(branches), tables, labels=branches,
                     origin=TreeOrigin(T, tuple(sbar)))


@dataclass(frozen=True)
class Decomposition:
    alpha: int
    outer: Structure
    inner: tuple[Structure, ...]
    product: Structure
    full: Structure
    witness: tuple[int, ...] | None

    @property
    def verified(self) -> bool:
        return self.witness is not None


def decompose(T: FamilyTree, sbar: Sequence[str] | None, alpha: int) -> Decomposition:
    """Split the tree product at height alpha into outer[inner]^{s_alpha}.

    The outer factor is the product over T restricted to alpha, the inner
    factors are the products over T_t for the nodes t of height alpha. The
    witness maps (outer branch, inner branch) to the concatenated branch and
    is checked against the tables.
    """
    if not 1 <= alpha < T.height:
        raise TreeError(f"alpha must lie in 1..{T.height - 1}, got {alpha}")
    sbar = default_sbar(T) if sbar is None else list(sbar)
    full = tree_product(T, sbar)
    head, s_alpha, tail = sbar[:alpha - 1], sbar[alpha - 1], sbar[alpha:]
    outer = tree_product(T.restrict(alpha), head)
    inner = [tree_product(T.subtree_at(b[-1]), tail) for b in outer.labels]
    # both factors must speak the whole signature: deeper agreement never
    # holds across blocks, shallower agreement always holds inside one
    outer_x = outer
    for s in tail:
        outer_x = expand(outer_x, s, 2, ())
    inner_x = []
    for N in inner:
        for s in head:
            N = expand(N, s, 2, full_relation(N.size))
        inner_x.append(reorder_signature(N, outer_x.signature))
    prod = lex_product(ProductSpec(outer_x, tuple(inner_x), s_alpha))
    prod = reorder_signature(prod, full.signature)
    index = {b: i for i, b in enumerate(full.labels)}
    witness = tuple(index[outer.labels[i] + inner[i].labels[j][1:]] for i, j in prod.labels)
    ok = is_isomorphism(prod, full, witness)
    return Decomposition(alpha, outer, tuple(inner), prod, full, witness if ok else None)


def qf_type_decomposition_check(T: FamilyTree, sbar: Sequence[str] | None,
                                branch_tuple: Sequence[Branch | int]) -> bool:
    """Rebuild the atomic diagram of a branch tuple from meet heights and node types.

    Requires every node structure to be transitive. The s-atoms come from
    the pairwise meet heights, every other atom from the quantifier-free
    type, in the node structure at the meet, of the successor tuple.
    """
    from .logic import is_transitive, qf_type, QfType

    for t in T.internal():
        if not is_transitive(T.structure(t)):
            raise PreconditionError(f"structure at node {t!r} is not transitive")
    sbar = default_sbar(T) if sbar is None else list(sbar)
    P = tree_product(T, sbar)
    index = {b: i for i, b in enumerate(P.labels)}
    tup = [P.labels[x] if isinstance(x, int) else tuple(x) for x in branch_tuple]
    elems = tuple(index[b] for b in tup)
    actual = qf_type(P, elems)

    n = len(tup)
    atoms = set()
    for alpha, s in enumerate(sbar, start=1):
        for i in range(n):
            for j in range(n):
                if meet_height(tup[i], tup[j]) >= alpha:
                    atoms.add((s, (i, j)))
    for sym, k in T.signature.relations:
        for idx in cartesian(range(n), repeat=k):
            bs = [tup[i] for i in idx]
            m = tuple_meet(bs)
            node = bs[0][m]
            succ = tuple(successor_position(T, b, m) for b in bs)
            node_type = qf_type(T.structure(node), succ)
            if (sym, tuple(range(k))) in node_type.atoms:
                atoms.add((sym, idx))
    equalities = frozenset((i, j) for i in range(n) for j in range(i + 1, n) if tup[i] == tup[j])
    predicted = QfType(n, frozenset(atoms), equalities)
    return predicted == actual
