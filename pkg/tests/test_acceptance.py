"""Acceptance criteria 1-9, each with its tolerance and time limit.

Every criterion prints one PASS/FAIL line and returns a JSON-serialisable
report (no timings), so criterion 9 can rerun them and compare bytes.
"""

from __future__ import annotations

import itertools
import json
import random
import subprocess
import sys
import time

from lexitree.generators import DenseSampler, catalog_structure, dense_branch_sample, linear, sample_product
from lexitree.indivisibility import BLUE, RED, NodeColoring, extract_red_subtree, product_indivisibility_check
from lexitree.logic import back_and_forth_iso, is_transitive, is_weakly_ultrahomogeneous
from lexitree.products import ProductSpec, check_associativity, lex_power, lex_product
from lexitree.rigid import RigidSpec, build_rigid_truncation, rigidity_report, verify_s_definability
from lexitree.search import find_embedding, find_isomorphism
from lexitree.structures import induced_substructure, is_isomorphism
from lexitree.tree import FamilyTree, decompose, qf_type_decomposition_check, tree_from_function, uniform_tree
from oracles import brute_lex_product, brute_red_subtree, random_signature, random_structure

SEED = 20240601
POOL = ("K2", "E2", "K3", "E3")


def _report(capsys, n, ok, detail, elapsed, limit):
    within = elapsed < limit
    line = f"criterion {n}: {'PASS' if ok and within else 'FAIL'} ({detail}; {elapsed:.2f}s of {limit}s)"
    with capsys.disabled():
        print("\n" + line, flush=True)
    assert ok, line
    assert within, line


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------- 1


def criterion_1(seed=SEED):
    rng = random.Random(seed)
    bad = []
    for k in range(200):
        sig = random_signature(rng)
        outer = random_structure(rng, sig, rng.randint(1, 4))
        inner = [random_structure(rng, sig, rng.randint(1, 4)) for _ in range(outer.size)]
        if lex_product(ProductSpec(outer, tuple(inner), "s")) != brute_lex_product(outer, inner, "s"):
            bad.append(k)
    return {"specs": 200, "mismatches": bad}


def test_criterion_1_product_correctness(capsys):
    rep, dt = _timed(criterion_1)
    _report(capsys, 1, not rep["mismatches"], f"{rep['specs']} specs, {len(rep['mismatches'])} mismatches", dt, 5)


# ---------------------------------------------------------------- 2


def _test_trees():
    """Uniform trees of depth 2..3 with branching <= 3 over the pool."""
    out = []
    for d in (2, 3):
        for names in itertools.product(POOL, repeat=d):
            out.append(uniform_tree([catalog_structure(n) for n in names]))
    return out


def criterion_2():
    pool = [catalog_structure(n) for n in POOL]
    assoc = bad = 0
    for M, N, P in itertools.product(pool, repeat=3):
        r = check_associativity(M, N, P)
        assoc += 1
        if not (r.isomorphic and r.canonical and is_isomorphism(r.left, r.right, r.witness)):
            bad += 1
    dec = 0
    for T in _test_trees():
        for alpha in range(1, T.height):
            d = decompose(T, None, alpha)
            dec += 1
            if not d.verified:
                bad += 1
    return {"associativity_checks": assoc, "decompositions": dec, "failures": bad}


def test_criterion_2_associativity(capsys):
    rep, dt = _timed(criterion_2)
    _report(capsys, 2, rep["failures"] == 0,
            f"{rep['associativity_checks']} triples, {rep['decompositions']} decompositions, "
            f"{rep['failures']} unverified", dt, 30)


# ---------------------------------------------------------------- 3


def criterion_3():
    trees = [uniform_tree([catalog_structure(n) for n in names])
             for d in (1, 2) for names in itertools.product(POOL + ("C4",), repeat=d)]
    rng = random.Random(SEED)
    for _ in range(6):
        trees.append(tree_from_function(3, lambda p: catalog_structure(rng.choice(("K2", "E2", "C3")))))
    tuples = bad = 0
    for T in trees:
        n = len(T.branches())
        for k in (1, 2, 3):
            for tup in itertools.product(range(n), repeat=k):
                tuples += 1
                if not qf_type_decomposition_check(T, None, tup):
                    bad += 1
    return {"trees": len(trees), "tuples": tuples, "failures": bad}


def test_criterion_3_qf_types(capsys):
    rep, dt = _timed(criterion_3)
    _report(capsys, 3, rep["failures"] == 0,
            f"{rep['trees']} trees, {rep['tuples']} tuples, {rep['failures']} mismatches", dt, 60)


# ---------------------------------------------------------------- 4


def criterion_4():
    names = POOL + ("C5",)
    pairs, bad = 0, []
    for a, b in itertools.product(names, repeat=2):
        A, B = catalog_structure(a), catalog_structure(b)
        if A.size * B.size > 10 or not is_transitive(A):
            continue
        X = lex_power(A, B, "s")
        pairs += 1
        if not (is_transitive(X) and is_weakly_ultrahomogeneous(X).holds):
            bad.append(f"{a}[{b}]")
    return {"pairs": pairs, "failures": bad}


def test_criterion_4_homogeneity(capsys):
    rep, dt = _timed(criterion_4)
    _report(capsys, 4, not rep["failures"], f"{rep['pairs']} products, {len(rep['failures'])} failures", dt, 120)


# ---------------------------------------------------------------- 5


def criterion_5():
    templates = [names for d in (1, 2, 3) for names in itertools.product(POOL, repeat=d)]
    checked, disagreements = 0, []
    for names in templates:
        levels = [catalog_structure(n) for n in names]
        T, base = dense_branch_sample(DenseSampler(levels))
        A = sample_product(T, base)
        for order, seed in (("canonical", 0), ("rotated", 1), ("shuffled", 2), ("shuffled", 3)):
            _, other = dense_branch_sample(DenseSampler(levels, order=order, seed=seed))
            B = sample_product(T, other)
            r = back_and_forth_iso(A, B)
            ok_bf = r.isomorphism is not None and is_isomorphism(A, B, r.isomorphism)
            ok_search = find_isomorphism(A, B) is not None
            checked += 1
            if not (ok_bf and ok_search):
                disagreements.append(f"{'.'.join(names)}:{order}:{seed}")
    return {"pairs": checked, "disagreements": disagreements}


def test_criterion_5_dense_samples(capsys):
    rep, dt = _timed(criterion_5)
    _report(capsys, 5, not rep["disagreements"],
            f"{rep['pairs']} sample pairs, {len(rep['disagreements'])} disagreements", dt, 60)


# ---------------------------------------------------------------- 6


def criterion_6():
    out = {}
    for label, args in (("L3,L3,L2,L2", (linear(3), linear(3), linear(2), linear(2))),
                        ("E3,E3,E1,E1", tuple(catalog_structure(n) for n in ("E3", "E3", "E1", "E1")))):
        r = product_indivisibility_check(*args)
        out[label] = r.to_json()
    return out


def test_criterion_6_indivisibility(capsys):
    rep, dt = _timed(criterion_6)
    ok = all(r["holds"] and not r["vacuous"] and r["colorings_checked"] == 512 for r in rep.values())
    _report(capsys, 6, ok, ", ".join(f"{k}: {v['colorings_checked']} colourings, "
                                     f"counterexample {v['counterexample']}" for k, v in rep.items()), dt, 10)


# ---------------------------------------------------------------- 7


def _plant(rng, T):
    """A pattern tree carried by a random sub-selection of T, with its image."""
    parent, structs, theta = {"u": None}, {}, {"u": T.root}

    def grow(u, t):
        if T.is_leaf(t):
            return
        M = T.structure(t)
        k = rng.randint(1, M.size)
        pick = sorted(rng.sample(range(M.size), k))
        structs[u] = induced_substructure(M, pick).with_name(None)
        for i, j in enumerate(pick):
            c = f"{u}.{i}"
            parent[c] = u
            theta[c] = T.children(t)[j]
            grow(c, T.children(t)[j])

    grow("u", T.root)
    return FamilyTree(parent, structs), theta


def _check_obstruction(T, U, C, r):
    if r.blue_root:
        return C[T.root] == BLUE
    t, u = r.obstruction, r.pattern_node
    Mu, Mt = U.structure(u), T.structure(t)
    if r.blue_copy is None:
        return True
    red = [i for i, c in enumerate(T.children(t)) if C[c] == RED]
    blue = [i for i, c in enumerate(T.children(t)) if C[c] == BLUE]
    return find_embedding(Mu, Mt, allowed=red) is None and \
        (find_embedding(Mu, Mt, allowed=blue) is not None) == r.blue_copy


def criterion_7(seed=SEED):
    rng = random.Random(seed)
    pool = ("K2", "E2", "K3", "E3", "C4")
    counts = {"planted": 0, "planted_found": 0, "free": 0, "free_found": 0,
              "blue_copy_flags": 0, "oracle_disagreements": 0, "bad_flags": 0}
    for k in range(50):
        T = tree_from_function(rng.randint(1, 2), lambda p: catalog_structure(rng.choice(pool)))
        U, theta = _plant(rng, T)
        planted = k % 2 == 0
        keep = set(theta.values()) if planted else {T.root}
        C = NodeColoring(T, {t: RED if t in keep or rng.random() < 0.5 else BLUE for t in T.nodes})
        r = extract_red_subtree(T, C, U)
        truth = bool(brute_red_subtree(U, T, C))
        if r.found != truth:
            counts["oracle_disagreements"] += 1
        if r.found:
            r.embedding.validate(C)
        elif not _check_obstruction(T, U, C, r):
            counts["bad_flags"] += 1
        if r.blue_copy:
            counts["blue_copy_flags"] += 1
        kind = "planted" if planted else "free"
        counts[kind] += 1
        counts[kind + "_found"] += r.found
    return counts


def test_criterion_7_red_subtrees(capsys):
    rep, dt = _timed(criterion_7)
    ok = rep["planted_found"] == rep["planted"] and rep["oracle_disagreements"] == 0 and rep["bad_flags"] == 0
    _report(capsys, 7, ok, f"{rep['planted_found']}/{rep['planted']} planted found, "
                           f"{rep['free_found']}/{rep['free']} free found, {rep['blue_copy_flags']} blue-copy flags, "
                           f"{rep['oracle_disagreements']} oracle disagreements", dt, 30)


# ---------------------------------------------------------------- 8


def criterion_8():
    P3 = build_rigid_truncation(RigidSpec(3, 2))
    rep = rigidity_report(P3)
    P4 = build_rigid_truncation(RigidSpec(4, 2))
    defs = {"d3": [verify_s_definability(P3, 1).holds],
            "d4": [verify_s_definability(P4, i).holds for i in (1, 2)]}
    return {"automorphisms": rep.automorphisms, "deepest_level_order": rep.deepest_level_order,
            "tree_action_trivial": rep.tree_action_trivial, "reduct_same_group": rep.reduct_same_group,
            "definability": defs}


def test_criterion_8_rigid_construction(capsys):
    rep, dt = _timed(criterion_8)
    defs_ok = all(all(v) for v in rep["definability"].values())
    detail = (f"|Aut| = {rep['automorphisms']} (expected 1; product of bottom-cell groups "
              f"{rep['deepest_level_order']}, tree action trivial: {rep['tree_action_trivial']}), "
              f"definability {'exact' if defs_ok else 'FAILED'}, reduct same group: {rep['reduct_same_group']}")
    _report(capsys, 8, rep["automorphisms"] == 1 and defs_ok and rep["reduct_same_group"], detail, dt, 60)


# ---------------------------------------------------------------- 9

_CLI_RUNS = [
    ["indiv", "--gen", "rado", "--n", "9", "--m", "3", "--mode", "sampled", "--seed", str(SEED), "--samples", "40"],
    ["check", "--property", "weak-hom", "catalog:P4"],
    ["rigid", "--depth", "3", "--branching", "2", "--verify-definability", "--verify-rigidity"],
]


def criterion_9():
    same = []
    for fn in (criterion_1, criterion_6, criterion_7):
        a, b = json.dumps(fn(), sort_keys=True), json.dumps(fn(), sort_keys=True)
        same.append(a == b)
    for argv in _CLI_RUNS:
        outs = [subprocess.run([sys.executable, "-m", "lexitree.cli", *argv], capture_output=True).stdout
                for _ in range(2)]
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    return {"runs": len(same), "identical": sum(same)}


def test_criterion_9_determinism(capsys):
    rep, dt = _timed(criterion_9)
    _report(capsys, 9, rep["identical"] == rep["runs"],
            f"{rep['identical']}/{rep['runs']} repeated reports byte-identical", dt, 120)
