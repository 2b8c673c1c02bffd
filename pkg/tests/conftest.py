from __future__ import annotations

import itertools

from hypothesis import strategies as st

from lexitree.generators import catalog_structure, cycle, empty_graph, path
from lexitree.structures import GRAPH, Signature, Structure


def K(n):
    return catalog_structure(f"K{n}")


def E(n):
    return empty_graph(n)


def C(n):
    return cycle(n)


def P(n):
    return path(n)


@st.composite
def signatures(draw, max_rel=2, max_arity=3):
    k = draw(st.integers(0, max_rel))
    arities = draw(st.lists(st.integers(1, max_arity), min_size=k, max_size=k))
    return Signature("rand", tuple((f"R{i}", a) for i, a in enumerate(arities)))


@st.composite
def structures(draw, sig=None, min_size=0, max_size=4, max_rel=2, max_arity=3):
    sig = sig if sig is not None else draw(signatures(max_rel, max_arity))
    n = draw(st.integers(min_size, max_size))
    tables = {}
    for s, k in sig.relations:
        tuples = list(itertools.product(range(n), repeat=k))
        if tuples:
            tables[s] = draw(st.lists(st.sampled_from(tuples), max_size=min(len(tuples), 12), unique=True))
        else:
            tables[s] = []
    return Structure(sig, n, tables)


@st.composite
def graphs(draw, min_size=0, max_size=5, symmetric=True):
    n = draw(st.integers(min_size, max_size))
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j and (not symmetric or i < j)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    rows = set(chosen)
    if symmetric:
        rows |= {(j, i) for i, j in chosen}
    return Structure(GRAPH, n, {"E": sorted(rows)})


def brute_isomorphisms(M, N):
    """All bijections preserving every table, by trying every permutation."""
    if M.size != N.size:
        return []
    out = []
    for perm in itertools.permutations(range(M.size)):
        ok = True
        for s in M.signature.symbols:
            image = {tuple(perm[v] for v in t) for t in M.tables[s]}
            if image != set(N.tables[s]):
                ok = False
                break
        if ok:
            out.append(perm)
    return out


def brute_partial_iso(M, N, mapping):
    dom = list(mapping)
    for s, k in M.signature.relations:
        for t in itertools.product(dom, repeat=k):
            if (t in M.tables[s]) != (tuple(mapping[v] for v in t) in N.tables[s]):
                return False
    return len(set(mapping.values())) == len(mapping)


def all_partial_isos(M, max_size):
    """Every partial isomorphism M -> M with domain size <= max_size."""
    for m in range(max_size + 1):
        for A in itertools.combinations(range(M.size), m):
            for B in itertools.permutations(range(M.size), m):
                f = dict(zip(A, B))
                if brute_partial_iso(M, M, f):
                    yield f
