"""Quantifier-free types, transitivity and ultrahomogeneity checks.

Weak and strong ultrahomogeneity are decided by two separate procedures:

* weak: for every isomorphism type of an m-element substructure, the set of
  one-point extension patterns over its copies must agree under every
  isomorphism between copies (checked on a representative against the
  generators of its automorphism group). Aut(M) is never consulted.
* strong: copies of each m-element type must form one orbit of Aut(M) on
  m-sets, and every automorphism of the representative must extend to an
  automorphism of M.

Both return a counterexample partial isomorphism when they fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Mapping, Sequence

from .errors import BudgetExceeded, ExtensionError, PreconditionError, StructureError
from .search import find_isomorphism, set_orbits, stabilizer_chain
from .structures import PartialIso, Structure, induced_substructure, is_isomorphism, is_partial_iso
from .tree import TreeOrigin, meet_height, successor_position


@dataclass(frozen=True)
class QfType:
    """Atomic diagram of a tuple: atoms as (symbol, index pattern) plus equalities."""

    length: int
    atoms: frozenset[tuple[str, tuple[int, ...]]]
    equalities: frozenset[tuple[int, int]]

    def describe(self) -> list[str]:
        out = [f"{s}({','.join(f'x{i}' for i in idx)})" for s, idx in sorted(self.atoms)]
        for i in range(self.length):
            for j in range(i + 1, self.length):
                rel = "=" if (i, j) in self.equalities else "!="
                out.append(f"x{i}{rel}x{j}")
        return out


def qf_type(M: Structure, tup: Sequence[int]) -> QfType:
    tup = tuple(int(v) for v in tup)
    for v in tup:
        if not 0 <= v < M.size:
            raise StructureError(f"element {v} out of range 0..{M.size - 1}")
    n = len(tup)
    atoms = set()
    for sym, k in M.signature.relations:
        table = M.tables[sym]
        for idx in product(range(n), repeat=k):
            if tuple(tup[i] for i in idx) in table:
                atoms.add((sym, idx))
    eqs = frozenset((i, j) for i in range(n) for j in range(i + 1, n) if tup[i] == tup[j])
    return QfType(n, frozenset(atoms), eqs)


@lru_cache(maxsize=4096)
def point_orbits(M: Structure) -> tuple[tuple[int, ...], ...]:
    gens = stabilizer_chain(M).generators
    seen: dict[int, int] = {}
    orbits = []
    for e in M.universe:
        if e in seen:
            continue
        orbit = {e}
        frontier = [e]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = g[x]
                if y not in orbit:
                    orbit.add(y)
                    frontier.append(y)
        for x in orbit:
            seen[x] = len(orbits)
        orbits.append(tuple(sorted(orbit)))
    return tuple(orbits)


def is_transitive(M: Structure) -> bool:
    """Unique 1-type; for a finite structure, one Aut-orbit on elements."""
    return len(point_orbits(M)) <= 1


@dataclass
class CheckerParams:
    """``k_bound`` bounds |A| strictly (partial maps of size < k_bound); None means |M|."""

    k_bound: int | None = None
    max_size: int = 12
    max_nodes: int | None = None

    def __post_init__(self):
        if self.k_bound is not None and self.k_bound < 1:
            raise ValueError("k_bound must be at least 1")

    def bound_for(self, M: Structure) -> int:
        return M.size if self.k_bound is None else self.k_bound


@dataclass
class HomogeneityResult:
    holds: bool
    counterexample: PartialIso | None = None
    point: int | None = None
    subsets_checked: int = 0

    def __bool__(self):
        return self.holds


def _extension_pattern(M: Structure, A: Sequence[int], c: int) -> frozenset:
    pos = {a: i for i, a in enumerate(A)}
    pos[c] = len(A)
    out = set()
    for s, t in M.incidence()[c]:
        if all(v in pos for v in t):
            out.add((s, tuple(pos[v] for v in t)))
    return frozenset(out)


def _transport(pattern: frozenset, perm: Sequence[int]) -> frozenset:
    m = len(perm)
    return frozenset((s, tuple(m if i == m else perm[i] for i in idx)) for s, idx in pattern)


def _type_invariant(S: Structure) -> tuple:
    return tuple(sorted((s, len(rows)) for s, rows in S.tables.items()))


@dataclass
class _TypeClass:
    rep: tuple[int, ...]
    struct: Structure
    patterns: frozenset | None = None
    witness: dict[frozenset, int] = field(default_factory=dict)
    members: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)


def _classify(M: Structure, m: int):
    """Group the m-subsets of M by isomorphism type of the induced structure."""
    classes: list[_TypeClass] = []
    by_inv: dict[tuple, list[_TypeClass]] = {}
    for A in combinations(range(M.size), m):
        S = induced_substructure(M, A)
        inv = _type_invariant(S)
        hit = None
        for cls in by_inv.get(inv, []):
            g = find_isomorphism(S, cls.struct)
            if g is not None:
                hit = (cls, g)
                break
        if hit is None:
            cls = _TypeClass(A, S)
            by_inv.setdefault(inv, []).append(cls)
            classes.append(cls)
            hit = (cls, tuple(range(m)))
        hit[0].members.append((A, hit[1]))
        yield hit[0], A, hit[1]


def is_weakly_ultrahomogeneous(M: Structure, params: CheckerParams | None = None) -> HomogeneityResult:
    """Every partial isomorphism of size < k_bound extends by any one point."""
    params = params or CheckerParams()
    if M.size > params.max_size:
        raise BudgetExceeded(f"ultrahomogeneity check refused: universe {M.size} > bound {params.max_size}")
    top = min(params.bound_for(M) - 1, M.size - 1)
    checked = 0
    for m in range(1, top + 1):
        for cls, A, g in _classify(M, m):
            checked += 1
            patterns = {}
            for c in M.universe:
                if c not in A:
                    patterns.setdefault(_transport(_extension_pattern(M, A, c), g), c)
            if cls.patterns is None:
                # first copy: its pattern set must be invariant under Aut of the copy
                cls.patterns = frozenset(patterns)
                cls.witness = patterns
                for h in stabilizer_chain(cls.struct).generators:
                    for p, c in patterns.items():
                        if _transport(p, h) not in cls.patterns:
                            f = PartialIso(M, M, tuple((A[i], A[h[i]]) for i in range(m)))
                            return HomogeneityResult(False, f, c, checked)
                continue
            mine = frozenset(patterns)
            if mine == cls.patterns:
                continue
            rep = cls.rep
            extra = sorted(mine - cls.patterns, key=repr)
            if extra:
                # A -> rep along g, c's pattern has no realisation over rep
                c = patterns[extra[0]]
                f = PartialIso(M, M, tuple((A[i], rep[g[i]]) for i in range(m)))
            else:
                missing = sorted(cls.patterns - mine, key=repr)[0]
                c = cls.witness[missing]
                inv = [0] * m
                for i, gi in enumerate(g):
                    inv[gi] = i
                f = PartialIso(M, M, tuple((rep[j], A[inv[j]]) for j in range(m)))
            return HomogeneityResult(False, f, c, checked)
    return HomogeneityResult(True, subsets_checked=checked)


def is_strongly_ultrahomogeneous(M: Structure, params: CheckerParams | None = None) -> HomogeneityResult:
    """Every partial isomorphism of size < k_bound extends to an automorphism."""
    params = params or CheckerParams()
    if M.size > params.max_size:
        raise BudgetExceeded(f"ultrahomogeneity check refused: universe {M.size} > bound {params.max_size}")
    top = min(params.bound_for(M) - 1, M.size - 1)
    gens = stabilizer_chain(M).generators
    checked = 0
    for m in range(1, top + 1):
        subsets = [frozenset(A) for A in combinations(range(M.size), m)]
        orbit_of = set_orbits(M, subsets, gens)
        seen_classes = set()
        for cls, A, g in _classify(M, m):
            checked += 1
            rep = cls.rep
            if id(cls) not in seen_classes:
                seen_classes.add(id(cls))
                for h in stabilizer_chain(cls.struct).generators:
                    pairs = {rep[i]: rep[h[i]] for i in range(m)}
                    if find_isomorphism(M, M, pairs) is None:
                        return HomogeneityResult(False, PartialIso(M, M, tuple(pairs.items())), None, checked)
            if orbit_of[frozenset(A)] != orbit_of[frozenset(rep)]:
                f = PartialIso(M, M, tuple((A[i], rep[g[i]]) for i in range(m)))
                return HomogeneityResult(False, f, None, checked)
    return HomogeneityResult(True, subsets_checked=checked)


def is_ultrahomogeneous(M: Structure, params: CheckerParams | None = None) -> bool:
    return is_weakly_ultrahomogeneous(M, params).holds


def fails_at(f: PartialIso, c: int) -> bool:
    """True iff no d makes f + (c, d) a partial isomorphism (for checking counterexamples)."""
    mapping = f.mapping
    if c in mapping:
        return False
    return not any(
        is_partial_iso(f.source, f.target, {**mapping, c: d})
        for d in f.target.universe if d not in mapping.values()
    )


# ---------------------------------------------------------------- back and forth

def _one_point_ok(M: Structure, N: Structure, f: Mapping[int, int], used: set[int], x: int, y: int) -> bool:
    count = 0
    for s, t in M.incidence()[x]:
        if all(v == x or v in f for v in t):
            if tuple(y if v == x else f[v] for v in t) not in N.tables[s]:
                return False
            count += 1
    other = sum(1 for s, t in N.incidence()[y] if all(v == y or v in used for v in t))
    return other == count


def _tree_of(P: Structure) -> TreeOrigin:
    if not isinstance(P.origin, TreeOrigin) or P.labels is None:
        raise PreconditionError("structure does not carry tree-product metadata")
    return P.origin


def extend_partial_iso(f: PartialIso, b: int) -> int:
    """Find d with f + (b, d) quantifier-free type preserving, the tree-aware way.

    Source and target must be tree products (or induced sub-products, such as
    dense samples) whose node structures are transitive. Let m be the largest
    meet height of b against dom(f) and t0 the node of b at height m; the
    elements of dom(f) through t0 fix a partial map between the successor
    sets of t0 and of the matching image node t1, and the successor of b at
    t0 is sent to the least successor s of t1 that keeps that map a partial
    isomorphism. d is then the least target element through s.
    """
    P, Q = f.source, f.target
    oP, oQ = _tree_of(P), _tree_of(Q)
    for origin in (oP, oQ):
        for t in origin.tree.internal():
            if not is_transitive(origin.tree.structure(t)):
                raise ExtensionError(f"node structure at {t!r} is not transitive",
                                     constraint=f"transitivity of node {t!r}")
    fmap = f.mapping
    if b in fmap:
        return fmap[b]
    used = set(fmap.values())
    if not fmap:
        for d in Q.universe:
            if _one_point_ok(P, Q, {}, set(), b, d):
                return d
        raise ExtensionError("no target element has the 1-type of b", constraint="1-type")
    bb = P.labels[b]
    m = max(meet_height(bb, P.labels[a]) for a in fmap)
    t0 = bb[m]
    A0 = [a for a in sorted(fmap) if P.labels[a][m] == t0]
    t1 = Q.labels[fmap[A0[0]]][m]
    if any(Q.labels[fmap[a]][m] != t1 for a in A0):
        raise PreconditionError("f does not preserve the agreement relations")
    g = {}
    for a in A0:
        g[successor_position(oP.tree, P.labels[a], m)] = successor_position(oQ.tree, Q.labels[fmap[a]], m)
    M0, M1 = oP.tree.structure(t0), oQ.tree.structure(t1)
    if not is_partial_iso(M0, M1, g):
        raise PreconditionError(f"f does not induce a partial isomorphism at node {t0!r}")
    x = successor_position(oP.tree, bb, m)
    kids = oQ.tree.children(t1)
    tried = []
    for s in M1.universe:
        if s in g.values() or not is_partial_iso(M0, M1, {**g, x: s}):
            continue
        through = [d for d in Q.universe if d not in used and Q.labels[d][m + 1] == kids[s]]
        tried.append(kids[s])
        for d in through:
            if _one_point_ok(P, Q, fmap, used, b, d):
                return d
    if not tried:
        raise ExtensionError(
            f"no successor of {t1!r} realises the type of S_b({t0!r}) over the image",
            constraint=f"homogeneity of the structure at {t1!r}")
    raise ExtensionError(
        f"no target element passes through any of {tried}",
        constraint=f"density of the target below {t1!r}")


@dataclass
class BackAndForthResult:
    isomorphism: tuple[int, ...] | None
    stuck: PartialIso | None = None
    steps: int = 0
    tree_aware: bool = False


def back_and_forth_iso(P1: Structure, P2: Structure, params: CheckerParams | None = None) -> BackAndForthResult:
    """Alternate forth and back one-point extensions until the map is total.

    Uses the tree-aware extension when both sides carry tree metadata,
    otherwise scans candidates least index first. No backtracking: on
    ultrahomogeneous inputs every step succeeds, so getting stuck is
    reported together with the partial map reached.
    """
    params = params or CheckerParams(max_size=10_000)
    if max(P1.size, P2.size) > params.max_size:
        raise BudgetExceeded(f"back-and-forth refused: universe > {params.max_size}")
    if P1.size != P2.size or not P1.signature.same_symbols(P2.signature):
        return BackAndForthResult(None, PartialIso(P1, P2, ()), 0)
    tree_aware = isinstance(P1.origin, TreeOrigin) and isinstance(P2.origin, TreeOrigin) \
        and P1.labels is not None and P2.labels is not None
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    steps = 0

    def step(src, dst, f, g, x):
        if tree_aware:
            try:
                return extend_partial_iso(PartialIso(src, dst, tuple(f.items())), x)
            except (ExtensionError, PreconditionError):
                return None
        used = set(f.values())
        for y in dst.universe:
            if y not in used and _one_point_ok(src, dst, f, used, x, y):
                return y
        return None

    while len(fwd) < P1.size:
        for direction in (0, 1):
            if len(fwd) == P1.size:
                break
            steps += 1
            if direction == 0:
                x = min(e for e in P1.universe if e not in fwd)
                y = step(P1, P2, fwd, bwd, x)
                if y is None:
                    return BackAndForthResult(None, PartialIso(P1, P2, tuple(fwd.items())), steps, tree_aware)
                fwd[x], bwd[y] = y, x
            else:
                y = min(e for e in P2.universe if e not in bwd)
                x = step(P2, P1, bwd, fwd, y)
                if x is None:
                    return BackAndForthResult(None, PartialIso(P1, P2, tuple(fwd.items())), steps, tree_aware)
                fwd[x], bwd[y] = y, x
    perm = tuple(fwd[i] for i in P1.universe)
    if not is_isomorphism(P1, P2, perm):
        raise AssertionError("back-and-forth produced a non-isomorphism")
    return BackAndForthResult(perm, None, steps, tree_aware)
