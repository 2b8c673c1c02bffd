"""Isomorphism, embedding and automorphism search.

Backtracking over element maps. Isomorphism searches are pruned by a joint
colour refinement of both structures (individualised pins get their own
colours); embedding searches only use the local 1-type of each element.
Candidates are always tried least index first, so results are
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import BudgetExceeded, StructureError
from .structures import Signature, Structure, is_isomorphism, is_partial_iso

DEFAULT_MAX_AUT_SIZE = 12
DEFAULT_MAX_GROUP = 500_000
DEFAULT_MAX_TUPLES = 50_000


@dataclass
class SearchStats:
    nodes: int = 0
    limit: int | None = None

    def tick(self):
        self.nodes += 1
        if self.limit is not None and self.nodes > self.limit:
            raise BudgetExceeded(f"search exceeded {self.limit} nodes")


def local_type(M: Structure, e: int) -> tuple:
    """Atoms holding on the constant tuple (e, ..., e), per symbol."""
    return tuple((s, (e,) * k in M.tables[s]) for s, k in M.signature.relations)


def _refine(structures: Sequence[Structure], pins: Sequence[Sequence[int]]) -> list[list[int]]:
    """Joint colour refinement; colours are comparable across ``structures``.

    ``pins[j][i]`` is the i-th individualised element of structure j.
    """
    colours = []
    for M, pin in zip(structures, pins):
        pinned = {e: i for i, e in enumerate(pin)}
        colours.append([(local_type(M, e), pinned.get(e, -1)) for e in M.universe])
    palette: dict = {}
    cols = [[palette.setdefault(c, len(palette)) for c in cs] for cs in colours]
    n_classes = len(palette)
    while True:
        palette = {}
        new = []
        for M, cs in zip(structures, cols):
            inc = M.incidence()
            row = []
            for e in M.universe:
                sig = tuple(sorted(
                    (s, tuple(cs[v] for v in t), tuple(i for i, v in enumerate(t) if v == e))
                    for s, t in inc[e]
                ))
                row.append(palette.setdefault((cs[e], sig), len(palette)))
            new.append(row)
        cols = new
        if len(palette) == n_classes:
            return cols
        n_classes = len(palette)


class _Matcher:
    """Backtracking extension of an injective map from P into M."""

    def __init__(self, P: Structure, M: Structure, candidates: list[list[int]],
                 order: list[int], stats: SearchStats):
        self.P, self.M = P, M
        self.cand = candidates
        self.order = order
        self.stats = stats
        self.inc_p = P.incidence()
        self.inc_m = M.incidence()
        self.fwd: dict[int, int] = {}
        self.used: set[int] = set()

    def consistent(self, x: int, y: int) -> bool:
        fwd, used = self.fwd, self.used
        count = 0
        for s, t in self.inc_p[x]:
            if all(v == x or v in fwd for v in t):
                img = tuple(y if v == x else fwd[v] for v in t)
                if img not in self.M.tables[s]:
                    return False
                count += 1
        other = 0
        for s, t in self.inc_m[y]:
            if all(v == y or v in used for v in t):
                other += 1
                if other > count:
                    return False
        return other == count

    def run(self, depth: int = 0) -> Iterator[dict[int, int]]:
        if depth == len(self.order):
            yield dict(self.fwd)
            return
        x = self.order[depth]
        if x in self.fwd:
            yield from self.run(depth + 1)
            return
        for y in self.cand[x]:
            if y in self.used:
                continue
            self.stats.tick()
            if not self.consistent(x, y):
                continue
            self.fwd[x] = y
            self.used.add(y)
            yield from self.run(depth + 1)
            del self.fwd[x]
            self.used.discard(y)


def _search_order(candidates: list[list[int]], pinned: Iterable[int]) -> list[int]:
    pinned = list(pinned)
    rest = sorted((e for e in range(len(candidates)) if e not in set(pinned)),
                  key=lambda e: (len(candidates[e]), e))
    return pinned + rest


def _iso_matcher(M: Structure, N: Structure, pins: Mapping[int, int],
                 stats: SearchStats) -> _Matcher | None:
    if M.size != N.size or not M.signature.same_symbols(N.signature):
        return None
    for s in M.signature.symbols:
        if len(M.tables[s]) != len(N.tables[s]):
            return None
    src = list(pins)
    cm, cn = _refine([M, N], [src, [pins[a] for a in src]])
    if sorted(cm) != sorted(cn):
        return None
    by_colour: dict[int, list[int]] = {}
    for y in N.universe:
        by_colour.setdefault(cn[y], []).append(y)
    candidates = [by_colour.get(cm[x], []) for x in M.universe]
    return _Matcher(M, N, candidates, _search_order(candidates, src), stats)


def _pins_ok(M: Structure, N: Structure, pins: Mapping[int, int]) -> bool:
    return is_partial_iso(M, N, pins)


def find_isomorphism(M: Structure, N: Structure, pins: Mapping[int, int] | None = None,
                     max_nodes: int | None = None) -> tuple[int, ...] | None:
    """A bijection ``perm`` with ``perm[i]`` the image of ``i``, or None.

    ``pins`` forces part of the map. The result is verified against both
    tables before it is returned.
    """
    pins = dict(pins or {})
    if not _pins_ok(M, N, pins):
        return None
    stats = SearchStats(limit=max_nodes)
    matcher = _iso_matcher(M, N, pins, stats)
    if matcher is None:
        return None
    matcher.fwd.update(pins)
    matcher.used.update(pins.values())
    for f in matcher.run():
        perm = tuple(f[i] for i in M.universe)
        if not is_isomorphism(M, N, perm):
            raise AssertionError("isomorphism search returned an invalid map")
        return perm
    return None


def isomorphic(M: Structure, N: Structure) -> bool:
    return find_isomorphism(M, N) is not None


def find_embedding(P: Structure, M: Structure, allowed: Iterable[int] | None = None,
                   pins: Mapping[int, int] | None = None,
                   max_nodes: int | None = None) -> tuple[int, ...] | None:
    """Induced embedding of ``P`` into ``M`` with image inside ``allowed``."""
    for e in iter_embeddings(P, M, allowed, pins, max_nodes):
        return e
    return None


def iter_embeddings(P: Structure, M: Structure, allowed: Iterable[int] | None = None,
                    pins: Mapping[int, int] | None = None,
                    max_nodes: int | None = None) -> Iterator[tuple[int, ...]]:
    if not P.signature.same_symbols(M.signature):
        raise StructureError("embedding between different signatures")
    pins = dict(pins or {})
    allowed = sorted(set(M.universe) if allowed is None else set(allowed))
    if P.size > len(allowed) or not _pins_ok(P, M, pins):
        return
    types: dict[tuple, list[int]] = {}
    for y in allowed:
        types.setdefault(local_type(M, y), []).append(y)
    candidates = [types.get(local_type(P, x), []) for x in P.universe]
    matcher = _Matcher(P, M, candidates, _search_order(candidates, pins), SearchStats(limit=max_nodes))
    matcher.fwd.update(pins)
    matcher.used.update(pins.values())
    for f in matcher.run():
        emb = tuple(f[i] for i in P.universe)
        if not is_partial_iso(P, M, dict(enumerate(emb))):
            raise AssertionError("embedding search returned an invalid map")
        yield emb


# ---------------------------------------------------------------- groups

def compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """``p after q``: i -> p[q[i]]."""
    return tuple(p[v] for v in q)


def invert(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, v in enumerate(p):
        inv[v] = i
    return tuple(inv)


@dataclass
class StabilizerChain:
    """Base points and transversals of the pointwise-stabiliser chain of Aut(M).

    ``transversals[i]`` maps each point of the orbit of ``base[i]`` under the
    stabiliser of ``base[:i]`` to one automorphism sending ``base[i]`` there.
    """

    size: int
    base: list[int] = field(default_factory=list)
    transversals: list[dict[int, tuple[int, ...]]] = field(default_factory=list)

    @property
    def order(self) -> int:
        out = 1
        for t in self.transversals:
            out *= len(t)
        return out

    @property
    def generators(self) -> list[tuple[int, ...]]:
        ident = tuple(range(self.size))
        gens = {g for t in self.transversals for g in t.values() if g != ident}
        return sorted(gens)

    def elements(self) -> Iterator[tuple[int, ...]]:
        ident = tuple(range(self.size))
        levels = [[t[k] for k in sorted(t)] for t in self.transversals]
        for choice in product(*levels):
            g = ident
            for u in choice:
                g = compose(g, u)
            yield g


def stabilizer_chain(M: Structure, max_size: int | None = None,
                     max_nodes: int | None = None) -> StabilizerChain:
    """Aut(M) as a stabiliser chain, built from pinned isomorphism searches."""
    n = M.size
    if max_size is not None and n > max_size:
        raise BudgetExceeded(f"automorphism search refused: universe {n} > bound {max_size}")
    chain = StabilizerChain(n)
    fixed: list[int] = []
    while True:
        cols = _refine([M], [fixed])[0]
        if len(set(cols)) == n:
            break
        classes: dict[int, list[int]] = {}
        for e in M.universe:
            classes.setdefault(cols[e], []).append(e)
        b = min((c for c in classes.values() if len(c) > 1), key=lambda c: (len(c), c[0]))[0]
        pins = {v: v for v in fixed}
        trans = {}
        for y in classes[cols[b]]:
            if y == b:
                trans[y] = tuple(range(n))
                continue
            pins[b] = y
            g = find_isomorphism(M, M, pins, max_nodes=max_nodes)
            if g is not None:
                trans[y] = g
        chain.base.append(b)
        chain.transversals.append(trans)
        fixed.append(b)
    return chain


def automorphisms(M: Structure, max_size: int = DEFAULT_MAX_AUT_SIZE,
                  max_group: int = DEFAULT_MAX_GROUP) -> list[tuple[int, ...]]:
    """The whole automorphism group, sorted (the identity comes first)."""
    chain = stabilizer_chain(M, max_size=max_size)
    if chain.order > max_group:
        raise BudgetExceeded(f"|Aut| = {chain.order} exceeds the listing bound {max_group}")
    group = sorted(set(chain.elements()))
    for g in group:
        if not is_isomorphism(M, M, g):
            raise AssertionError("automorphism enumeration produced a non-automorphism")
    return group


def automorphism_count(M: Structure, max_size: int | None = None) -> int:
    return stabilizer_chain(M, max_size=max_size).order


def extends_to_automorphism(M: Structure, partial: Mapping[int, int]) -> tuple[int, ...] | None:
    return find_isomorphism(M, M, partial)


# ---------------------------------------------------------------- orbits

@dataclass(frozen=True)
class OrbitPartition:
    structure: Structure
    arity: int
    classes: tuple[tuple[tuple[int, ...], ...], ...]

    def class_of(self, tup: Sequence[int]) -> int:
        tup = tuple(tup)
        for i, c in enumerate(self.classes):
            if tup in c:
                return i
        raise KeyError(tup)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def orbit_partition(M: Structure, k: int, max_tuples: int = DEFAULT_MAX_TUPLES,
                    max_size: int | None = None) -> OrbitPartition:
    """Partition of all k-tuples into Aut(M)-orbits."""
    if k < 1:
        raise StructureError("arity must be positive")
    if M.size ** k > max_tuples:
        raise BudgetExceeded(f"{M.size}^{k} tuples exceed the orbit budget {max_tuples}")
    gens = stabilizer_chain(M, max_size=max_size).generators
    uf = _UnionFind()
    tuples = list(product(range(M.size), repeat=k))
    for t in tuples:
        uf.find(t)
        for g in gens:
            uf.union(t, tuple(g[v] for v in t))
    groups: dict = {}
    for t in tuples:
        groups.setdefault(uf.find(t), []).append(t)
    classes = sorted((tuple(sorted(c)) for c in groups.values()), key=lambda c: c[0])
    return OrbitPartition(M, k, tuple(classes))


def set_orbits(M: Structure, subsets: Iterable[frozenset[int]],
               generators: Sequence[Sequence[int]]) -> dict[frozenset[int], frozenset[int]]:
    """Representative (least sorted tuple) of each subset's orbit under the group."""
    uf = _UnionFind()
    key = lambda s: tuple(sorted(s))
    subsets = list(subsets)
    for s in subsets:
        uf.find(key(s))
        for g in generators:
            uf.union(key(s), key(g[v] for v in s))
    return {s: frozenset(uf.find(key(s))) for s in subsets}


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def morleyize(M: Structure, max_arity: int, max_tuples: int = DEFAULT_MAX_TUPLES) -> Structure:
    """Expansion by one predicate per Aut-orbit on k-tuples, k = 1..max_arity.

    New symbols are ``orb<k>_<i>`` with classes numbered by least tuple.
    """
    taken = set(M.signature.symbols)
    rels = []
    tables = dict(M.tables)
    for k in range(1, max_arity + 1):
        part = orbit_partition(M, k, max_tuples=max_tuples)
        for i, cls in enumerate(part.classes):
            sym = _fresh(f"orb{k}_{i}", taken)
            rels.append((sym, k))
            tables[sym] = cls
    sig = Signature(M.signature.name, M.signature.relations + tuple(rels))
    return Structure(sig, M.size, tables, name=M.name, labels=M.labels, origin=M.origin)
