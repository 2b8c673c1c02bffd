"""Command-line entry point.

Every command prints a JSON report to stdout and a one-line summary to
stderr. Exit codes: 0 for a true verdict or success, 1 for a false
verdict, 2 for usage errors, malformed input and exceeded budgets.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from .dsl import parse_file, serialize
from .errors import BudgetExceeded, DSLSyntaxError, LexitreeError
from .generators import catalog_structure, parse_generator
from .indivisibility import (
    DEFAULT_MAX_COLORINGS,
    NodeColoring,
    VertexColoring,
    coloring_profile,
    derive_node_coloring,
    extract_red_subtree,
)
from .logic import (
    CheckerParams,
    is_strongly_ultrahomogeneous,
    is_transitive,
    is_weakly_ultrahomogeneous,
    point_orbits,
)
from .products import ProductSpec, lex_product, mixed_clause_lint
from .search import stabilizer_chain
from .structures import Structure, induced_substructure, to_dot
from .tree import FamilyTree, decompose, default_sbar, tree_product

EXIT_TRUE, EXIT_FALSE, EXIT_ERROR = 0, 1, 2


class _Inputs:
    """Collects the bytes of every input so the report can carry one digest."""

    def __init__(self):
        self._h = hashlib.sha256()
        self.items: list[str] = []

    def add(self, label: str, data: bytes) -> None:
        self._h.update(label.encode() + b"\0" + data + b"\0")
        self.items.append(label)

    def digest(self) -> str:
        return self._h.hexdigest()


def _read(path: str, inputs: _Inputs) -> str:
    data = Path(path).read_bytes()
    inputs.add(Path(path).name, data)
    return data.decode()


def _load_structure(ref: str, inputs: _Inputs) -> Structure:
    """``FILE``, ``FILE:NAME`` (DSL or JSON) or ``catalog:K3``."""
    if ref.startswith("catalog:"):
        inputs.add(ref, b"")
        return catalog_structure(ref.split(":", 1)[1])
    path, name = ref, None
    if not os.path.exists(ref) and ":" in ref:
        path, name = ref.rsplit(":", 1)
    text = _read(path, inputs)
    if path.endswith(".json"):
        data = json.loads(text)
        return Structure.from_json(data.get("structure", data))
    structures = parse_file(text)
    if name is not None:
        if name not in structures:
            raise LexitreeError(f"no structure named {name!r} in {path}")
        return structures[name]
    if len(structures) != 1:
        raise LexitreeError(f"{path} declares {len(structures)} structures; pick one with {path}:NAME")
    return next(iter(structures.values()))


def _load_tree(path: str, structures: str | None, inputs: _Inputs) -> tuple[FamilyTree, list[str] | None]:
    named = parse_file(_read(structures, inputs)) if structures else {}

    def resolve(name: str) -> Structure:
        return named[name] if name in named else catalog_structure(name)

    return FamilyTree.from_json(json.loads(_read(path, inputs)), resolve)


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _pairs(f) -> list[list[int]]:
    return [[a, b] for a, b in f.pairs]


# ---------------------------------------------------------------- commands

def cmd_parse(args, inputs):
    structures = parse_file(_read(args.file, inputs))
    out = [{"name": n, "signature": M.signature.name, "universe": M.size,
            "tables": {s: len(M.tables[s]) for s in M.signature.symbols}}
           for n, M in structures.items()]
    if args.out:
        _write(args.out, "".join(serialize(M, n) for n, M in structures.items()))
    return True, {"structures": out}, f"{len(out)} structure(s) parsed"


def _emit(P: Structure, name: str, out: str | None, result: dict) -> None:
    if out is None:
        result["dsl"] = serialize(P, name)
    elif out.endswith(".json"):
        _write(out, json.dumps(P.with_name(name).to_json(), indent=2) + "\n")
    else:
        _write(out, serialize(P, name))


def cmd_product(args, inputs):
    outer = _load_structure(args.outer, inputs)
    inner = [_load_structure(r, inputs) for r in args.inner.split(",")]
    if len(inner) == 1:
        inner = inner * outer.size
    spec = ProductSpec(outer, tuple(inner), args.s)
    P = lex_product(spec)
    result: dict[str, Any] = {"universe": P.size, "signature": list(P.signature.symbols),
                              "mixed_clause_tuples": [[s, list(t)] for s, t in mixed_clause_lint(spec)]}
    _emit(P, args.name, args.out, result)
    return True, result, f"product with {P.size} elements"


def cmd_tree_product(args, inputs):
    T, sbar = _load_tree(args.tree, args.structures, inputs)
    sbar = sbar or default_sbar(T)
    P = tree_product(T, sbar)
    result: dict[str, Any] = {"universe": P.size, "height": T.height, "sbar": list(sbar),
                              "branches": [list(b) for b in P.labels]}
    _emit(P, args.name, args.out, result)
    return True, result, f"tree product with {P.size} branches"


def cmd_decompose(args, inputs):
    T, sbar = _load_tree(args.tree, args.structures, inputs)
    d = decompose(T, sbar, args.alpha)
    result = {"alpha": d.alpha, "outer_size": d.outer.size,
              "inner_sizes": [N.size for N in d.inner],
              "witness": list(d.witness) if d.witness else None}
    return d.verified, result, f"decomposition at height {args.alpha}: {'verified' if d.verified else 'FAILED'}"


def cmd_check(args, inputs):
    M = _load_structure(args.file, inputs)
    params = CheckerParams(k_bound=args.k, max_size=args.max_size)
    prop = args.property
    if prop == "transitive":
        orbits = [list(o) for o in point_orbits(M)]
        ok = is_transitive(M)
        return ok, {"property": prop, "orbits": orbits}, f"transitive: {ok}"
    if prop in ("weak-hom", "strong-hom"):
        if M.size > params.max_size:
            raise BudgetExceeded(f"universe {M.size} exceeds --max-size {params.max_size}")
        fn = is_weakly_ultrahomogeneous if prop == "weak-hom" else is_strongly_ultrahomogeneous
        r = fn(M, params)
        cex = None
        if r.counterexample is not None:
            cex = {"map": _pairs(r.counterexample), "point": r.point}
        return r.holds, {"property": prop, "k_bound": params.bound_for(M),
                         "subsets_checked": r.subsets_checked, "counterexample": cex}, f"{prop}: {r.holds}"
    chain = stabilizer_chain(M, max_size=args.max_size)
    gens = [list(g) for g in chain.generators]
    return chain.order == 1, {"property": prop, "automorphisms": chain.order, "generators": gens}, \
        f"|Aut| = {chain.order}"


def cmd_indiv(args, inputs):
    if args.mode == "sampled" and args.seed is None:
        raise _Usage("--seed is required in sampled mode")
    if args.m > args.n:
        raise _Usage("--m must not exceed --n")
    if args.gen.startswith("file:"):
        M = _load_structure(args.gen[5:], inputs)
        if args.n > M.size:
            raise _Usage(f"--n {args.n} exceeds the structure size {M.size}")
        target, pattern, name = induced_substructure(M, range(args.n)), induced_substructure(M, range(args.m)), M.name
    else:
        g = parse_generator(args.gen)
        inputs.add(g.name, b"")
        target, pattern, name = g.prefix(args.n), g.prefix(args.m), g.name
    rep = coloring_profile(target, pattern, args.mode, samples=args.samples, seed=args.seed,
                           max_colorings=args.max_colorings, dedup=args.dedup, name=name)
    if args.figure:
        from .plotting import plot_indivisibility
        plot_indivisibility(rep, args.figure)
    result = rep.to_json()
    result["seed"] = args.seed
    result["dedup"] = args.dedup
    return rep.holds, result, f"{rep.failures} of {rep.colorings_checked} colourings without a copy"


def cmd_red_subtree(args, inputs):
    T, _ = _load_tree(args.tree, args.structures, inputs)
    data = json.loads(_read(args.coloring, inputs))
    if "branch_colors" in data:
        c = VertexColoring.from_string(data["branch_colors"])
        C = derive_node_coloring(T, T.branches(), c)
    else:
        C = NodeColoring(T, data.get("colors", data))
    U = None
    if args.pattern:
        U, _ = _load_tree(args.pattern, args.structures, inputs)
    r = extract_red_subtree(T, C, U)
    result = r.to_json()
    result["node_colors"] = C.to_json()
    if r.found:
        summary = "red subtree found"
    else:
        summary = f"no red subtree (obstruction at {r.obstruction}, blue copy: {r.blue_copy})"
    return r.found, result, summary


def cmd_gen(args, inputs):
    g = parse_generator(args.kind)
    inputs.add(g.name, str(args.n).encode())
    M = g.prefix(args.n)
    text = serialize(M, args.name or f"{g.kind}{args.n}")
    result: dict[str, Any] = {"kind": g.name, "universe": M.size,
                              "tables": {s: len(M.tables[s]) for s in M.signature.symbols}}
    if args.out:
        _write(args.out, text)
    else:
        result["dsl"] = text
    return True, result, f"{g.name} prefix of size {args.n}"


def cmd_rigid(args, inputs):
    from .rigid import RigidSpec, build_rigid_truncation, parity_violations, rigidity_report, verify_s_definability

    spec = RigidSpec(args.depth, args.branching, args.catalog, args.max_elements)
    inputs.add("rigid", f"{spec.depth},{spec.branching},{spec.catalog}".encode())
    P = build_rigid_truncation(spec)
    ok = True
    result: dict[str, Any] = {"depth": spec.depth, "branching": spec.branching, "catalog": spec.catalog,
                              "universe": P.size, "parity_violations": len(parity_violations(P))}
    if args.verify_definability:
        defs = [verify_s_definability(P, i) for i in range(1, spec.depth)]
        result["definability"] = [d.to_json() for d in defs]
        ok &= all(d.holds for d in defs)
    rep = None
    if args.verify_rigidity or args.figure:
        rep = rigidity_report(P)
    if args.verify_rigidity:
        result["rigidity"] = rep.to_json()
        ok &= rep.rigid
    if args.figure:
        from .plotting import plot_rigidity
        plot_rigidity(rep, P.matrix("R"), args.figure)
    if args.out:
        _write(args.out, json.dumps({"structure": P.to_json(),
                                     "tree": P.origin.tree.to_json(list(P.origin.sbar))}))
    summary = f"rigid truncation with {P.size} elements"
    if rep is not None:
        summary += f", |Aut| = {rep.automorphisms}"
    return ok, result, summary


def cmd_export_dot(args, inputs):
    M = _load_structure(args.file, inputs)
    dot = to_dot(M)
    if args.out:
        _write(args.out, dot)
        return True, {"out": args.out}, "dot written"
    return True, {"dot": dot}, "dot rendered"


# ---------------------------------------------------------------- parser

class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lexitree", description="Lexicographic and tree products of finite structures.")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("parse", help="validate a structure file")
    s.add_argument("file")
    s.add_argument("--out", help="write the normalised file here")
    s.set_defaults(run=cmd_parse)

    s = sub.add_parser("product", help="lexicographic product OUTER[INNER...]")
    s.add_argument("--outer", required=True)
    s.add_argument("--inner", required=True,
                   help="comma-separated: one structure, or one per outer element in order")
    s.add_argument("--s", default=None, help="name of the same-block relation")
    s.add_argument("--name", default="P")
    s.add_argument("--out")
    s.set_defaults(run=cmd_product)

    for name, fn, help_ in (("tree-product", cmd_tree_product, "product over the branches of a tree"),
                            ("decompose", cmd_decompose, "split a tree product at a height")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("tree")
        s.add_argument("--structures", help="structure file resolving names in the tree file")
        if name == "decompose":
            s.add_argument("--alpha", type=int, required=True)
        else:
            s.add_argument("--name", default="P")
            s.add_argument("--out")
        s.set_defaults(run=fn)

    s = sub.add_parser("check", help="decide a property of a structure")
    s.add_argument("--property", required=True, choices=["transitive", "weak-hom", "strong-hom", "rigid"])
    s.add_argument("file")
    s.add_argument("--k", type=int, default=None, help="bound on partial map size (default: universe)")
    s.add_argument("--max-size", type=int, default=12)
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("indiv", help="monochromatic copies over all or sampled colourings")
    s.add_argument("--gen", required=True, help="linear, rado, cycle:K, complete, blocks:K or file:FILE")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--samples", type=int, default=256)
    s.add_argument("--max-colorings", type=int, default=DEFAULT_MAX_COLORINGS)
    s.add_argument("--dedup", action="store_true", help="skip colourings equivalent under automorphisms")
    s.add_argument("--figure", help="write a bar chart (PNG) here")
    s.set_defaults(run=cmd_indiv)

    s = sub.add_parser("red-subtree", help="embed a tree into its red nodes")
    s.add_argument("tree")
    s.add_argument("coloring")
    s.add_argument("--pattern", help="pattern tree (default: the tree itself)")
    s.add_argument("--structures")
    s.set_defaults(run=cmd_red_subtree)

    s = sub.add_parser("gen", help="write a generator prefix")
    s.add_argument("--kind", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--name")
    s.add_argument("--out")
    s.set_defaults(run=cmd_gen)

    s = sub.add_parser("rigid", help="build and verify a truncated rigid construction")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--branching", type=int, required=True)
    s.add_argument("--catalog", choices=["cycles", "pure"], default="cycles")
    s.add_argument("--max-elements", type=int, default=27)
    s.add_argument("--verify-definability", action="store_true")
    s.add_argument("--verify-rigidity", action="store_true")
    s.add_argument("--out", help="write the structure and tree as JSON")
    s.add_argument("--figure", help="write R and class matrices (PNG) here")
    s.set_defaults(run=cmd_rigid)

    s = sub.add_parser("export-dot", help="Graphviz rendering of a binary structure")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(run=cmd_export_dot)
    return p


def _threads() -> int:
    raw = os.environ.get("LEXITREE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except _Usage as e:
        print(str(e), file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    except SystemExit as e:  # --help
        return int(e.code or 0)
    inputs = _Inputs()
    start = time.perf_counter()
    try:
        verdict, result, summary = args.run(args, inputs)
    except _Usage as e:
        print(f"lexitree {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except DSLSyntaxError as e:
        print(f"lexitree {args.command}: syntax error, {e}", file=sys.stderr)
        return EXIT_ERROR
    except BudgetExceeded as e:
        print(f"lexitree {args.command}: budget exceeded: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (LexitreeError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"lexitree {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR
    report: dict[str, Any] = {
        "command": args.command,
        "inputs": {"items": inputs.items, "digest": inputs.digest()},
        "verdict": bool(verdict),
        "result": result,
        "budget": {"threads": _threads()},
    }
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    print(json.dumps(report, indent=2))
    print(f"lexitree {args.command}: {summary}", file=sys.stderr)
    return EXIT_TRUE if verdict else EXIT_FALSE


if __name__ == "__main__":
    sys.exit(main())
