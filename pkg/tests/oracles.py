"""Independent brute-force evaluators used as test oracles."""

from __future__ import annotations

import itertools
import random

from lexitree.structures import Signature, Structure


def brute_lex_product(outer, inner, s_symbol=None):
    """Evaluate the product relation clause by clause over every tuple of pairs."""
    pairs = [(a, b) for a in range(outer.size) for b in range(inner[a].size)]
    tables = {}
    for sym, k in outer.signature.relations:
        rows = set()
        for tup in itertools.product(range(len(pairs)), repeat=k):
            firsts = [pairs[i][0] for i in tup]
            seconds = [pairs[i][1] for i in tup]
            if len(set(firsts)) == 1:
                holds = tuple(seconds) in set(inner[firsts[0]].table(sym))
            else:
                holds = tuple(firsts) in set(outer.table(sym))
            if holds:
                rows.add(tup)
        tables[sym] = rows
    sig = outer.signature
    if s_symbol is not None:
        sig = sig.extend([(s_symbol, 2)])
        tables[s_symbol] = {(i, j) for i in range(len(pairs)) for j in range(len(pairs))
                            if pairs[i][0] == pairs[j][0]}
    return Structure(sig, len(pairs), tables)


def random_structure(rng: random.Random, sig: Signature, n: int, density: float = 0.35) -> Structure:
    tables = {}
    for s, k in sig.relations:
        tables[s] = [t for t in itertools.product(range(n), repeat=k) if rng.random() < density]
    return Structure(sig, n, tables)


def random_signature(rng: random.Random, max_arity: int = 3) -> Signature:
    k = rng.randint(1, 3)
    return Signature("rnd", tuple((f"R{i}", rng.randint(1, max_arity)) for i in range(k)))


def brute_weakly_homogeneous(M, k_bound=None):
    """Every partial isomorphism of size < k_bound extends by every point."""
    from conftest import all_partial_isos, brute_partial_iso

    k = M.size if k_bound is None else k_bound
    for f in all_partial_isos(M, min(k - 1, M.size)):
        for c in range(M.size):
            if c in f:
                continue
            if not any(brute_partial_iso(M, M, {**f, c: d}) for d in range(M.size) if d not in f.values()):
                return False, (f, c)
    return True, None


def brute_strongly_homogeneous(M, k_bound=None):
    """Every partial isomorphism of size < k_bound extends to an automorphism."""
    from conftest import all_partial_isos, brute_isomorphisms

    k = M.size if k_bound is None else k_bound
    group = brute_isomorphisms(M, M)
    for f in all_partial_isos(M, min(k - 1, M.size)):
        if not any(all(g[a] == b for a, b in f.items()) for g in group):
            return False, f
    return True, None


def brute_red_subtree(U, T, C):
    """Search every level-by-level assignment of pattern nodes to red tree nodes."""
    from conftest import brute_partial_iso

    def options(u, t):
        if C[t] != "red":
            return []
        if U.is_leaf(u):
            return [{u: t}]
        if T.is_leaf(t):
            return []
        kids_u, kids_t = U.children(u), T.children(t)
        found = []
        for choice in itertools.permutations(range(len(kids_t)), len(kids_u)):
            if not brute_partial_iso(U.structure(u), T.structure(t), dict(enumerate(choice))):
                continue
            subs = [options(kids_u[i], kids_t[j]) for i, j in enumerate(choice)]
            for combo in itertools.product(*subs):
                theta = {u: t}
                for part in combo:
                    theta.update(part)
                found.append(theta)
        return found

    return options(U.root, T.root)
