"""Two-colourings, monochromatic copies and the red-subtree extraction.

Colourings of an n-element structure are numbered by binary counting:
bit j of the index is 1 iff element j is blue, so index 0 is all red.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

from .errors import BudgetExceeded, StructureError, TreeError
from .generators import Generator, is_dense, sample_product
from .products import lex_power
from .search import automorphisms, find_embedding, iter_embeddings
from .structures import Structure, induced_substructure, is_partial_iso
from .tree import Branch, FamilyTree

RED, BLUE = "red", "blue"
DEFAULT_MAX_COLORINGS = 1 << 16


@dataclass(frozen=True)
class VertexColoring:
    size: int
    blue: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "blue", frozenset(self.blue))
        if any(not 0 <= e < self.size for e in self.blue):
            raise StructureError("coloured element out of range")

    @classmethod
    def from_index(cls, n: int, index: int) -> VertexColoring:
        return cls(n, frozenset(j for j in range(n) if index >> j & 1))

    @classmethod
    def from_string(cls, text: str) -> VertexColoring:
        text = text.strip().upper()
        if set(text) - {"R", "B"}:
            raise StructureError(f"colouring strings use R and B only, got {text!r}")
        return cls(len(text), frozenset(j for j, ch in enumerate(text) if ch == "B"))

    @classmethod
    def from_colors(cls, colors: Sequence[str]) -> VertexColoring:
        bad = set(colors) - {RED, BLUE}
        if bad:
            raise StructureError(f"unknown colours {sorted(bad)}")
        return cls(len(colors), frozenset(j for j, c in enumerate(colors) if c == BLUE))

    @property
    def index(self) -> int:
        return sum(1 << j for j in self.blue)

    def color(self, e: int) -> str:
        return BLUE if e in self.blue else RED

    def elements(self, color: str) -> list[int]:
        return [e for e in range(self.size) if (e in self.blue) == (color == BLUE)]

    def to_string(self) -> str:
        return "".join("B" if e in self.blue else "R" for e in range(self.size))


@dataclass(frozen=True)
class MonochromaticCopy:
    embedding: tuple[int, ...]
    color: str


def find_monochromatic_copy(M: Structure, c: VertexColoring, pattern: Structure,
                            max_nodes: int | None = None) -> MonochromaticCopy | None:
    """Induced copy of ``pattern`` inside one colour class; red is tried first."""
    if c.size != M.size:
        raise StructureError("colouring and structure differ in size")
    for color in (RED, BLUE):
        emb = find_embedding(pattern, M, allowed=c.elements(color), max_nodes=max_nodes)
        if emb is not None:
            if not is_partial_iso(pattern, M, dict(enumerate(emb))) or \
                    any(c.color(v) != color for v in emb):
                raise AssertionError("monochromatic copy failed validation")
            return MonochromaticCopy(emb, color)
    return None


def _canonical_under(group: Sequence[Sequence[int]], index: int, n: int) -> bool:
    blue = [j for j in range(n) if index >> j & 1]
    for g in group:
        if sum(1 << g[j] for j in blue) < index:
            return False
    return True


def iter_colorings(n: int, mode: str = "exhaustive", samples: int = 256, seed: int | None = None,
                   max_colorings: int = DEFAULT_MAX_COLORINGS,
                   symmetry: Sequence[Sequence[int]] | None = None) -> Iterator[VertexColoring]:
    """Colourings in binary-counting order, or seeded random draws."""
    if mode == "exhaustive":
        if (1 << n) > max_colorings:
            raise BudgetExceeded(f"2^{n} colourings exceed the budget of {max_colorings}")
        for idx in range(1 << n):
            if symmetry is None or _canonical_under(symmetry, idx, n):
                yield VertexColoring.from_index(n, idx)
    elif mode == "sampled":
        if seed is None:
            raise StructureError("sampled mode needs a seed")
        if samples > max_colorings:
            raise BudgetExceeded(f"{samples} samples exceed the budget of {max_colorings}")
        rng = random.Random(seed)
        for _ in range(samples):
            yield VertexColoring.from_index(n, rng.getrandbits(n) if n else 0)
    else:
        raise StructureError(f"unknown mode {mode!r}")


@dataclass
class IndivisibilityReport:
    structure: str
    n: int
    m: int
    mode: str
    colorings_checked: int
    failures: int
    holds: bool
    worst: str | None
    red_copies: int = 0
    blue_copies: int = 0

    def to_json(self) -> dict:
        return {
            "structure": self.structure, "n": self.n, "m": self.m, "mode": self.mode,
            "colorings_checked": self.colorings_checked, "failures": self.failures,
            "holds": self.holds, "worst": self.worst,
            "red_copies": self.red_copies, "blue_copies": self.blue_copies,
        }


def coloring_profile(M: Structure, pattern: Structure, mode: str = "exhaustive", *,
                     samples: int = 256, seed: int | None = None,
                     max_colorings: int = DEFAULT_MAX_COLORINGS, dedup: bool = False,
                     name: str | None = None) -> IndivisibilityReport:
    """Check every (or every sampled) colouring of M for a monochromatic ``pattern``.

    ``worst`` is the first colouring without a copy, in enumeration order.
    """
    symmetry = automorphisms(M)[1:] if dedup else None
    checked = failures = reds = blues = 0
    worst = None
    for c in iter_colorings(M.size, mode, samples, seed, max_colorings, symmetry):
        checked += 1
        hit = find_monochromatic_copy(M, c, pattern)
        if hit is None:
            failures += 1
            if worst is None:
                worst = c.to_string()
        elif hit.color == RED:
            reds += 1
        else:
            blues += 1
    return IndivisibilityReport(name or M.name or "M", M.size, pattern.size, mode, checked,
                                failures, failures == 0, worst, reds, blues)


def indivisibility_profile(gen: Generator | Callable[[int], Structure], n: int, m: int,
                           mode: str = "exhaustive", **kwargs) -> IndivisibilityReport:
    """Colourings of prefix(n) against the pattern prefix(m)."""
    if m > n:
        raise StructureError("pattern larger than the prefix")
    prefix = gen.prefix if isinstance(gen, Generator) else gen
    name = gen.name if isinstance(gen, Generator) else kwargs.pop("name", None)
    return coloring_profile(prefix(n), prefix(m), mode, name=name, **kwargs)


@dataclass
class ProductIndivisibilityReport:
    outer_hypothesis: bool
    inner_hypothesis: bool
    conclusion: bool | None
    counterexample: str | None
    colorings_checked: int

    @property
    def vacuous(self) -> bool:
        return not (self.outer_hypothesis and self.inner_hypothesis)

    @property
    def holds(self) -> bool:
        return self.vacuous or bool(self.conclusion)

    def to_json(self) -> dict:
        return {
            "outer_hypothesis": self.outer_hypothesis, "inner_hypothesis": self.inner_hypothesis,
            "vacuous": self.vacuous, "conclusion": self.conclusion,
            "counterexample": self.counterexample, "colorings_checked": self.colorings_checked,
            "holds": self.holds,
        }


def product_indivisibility_check(M: Structure, N: Structure, pM: Structure, pN: Structure,
                                 s_symbol: str = "s",
                                 max_colorings: int = DEFAULT_MAX_COLORINGS) -> ProductIndivisibilityReport:
    """If M always has a monochromatic pM and N a monochromatic pN, M[N]^s always has pM[pN]^s."""
    hyp_m = coloring_profile(M, pM, max_colorings=max_colorings).holds
    hyp_n = coloring_profile(N, pN, max_colorings=max_colorings).holds
    if not (hyp_m and hyp_n):
        return ProductIndivisibilityReport(hyp_m, hyp_n, None, None, 0)
    prof = coloring_profile(lex_power(M, N, s_symbol), lex_power(pM, pN, s_symbol),
                            max_colorings=max_colorings)
    return ProductIndivisibilityReport(hyp_m, hyp_n, prof.holds, prof.worst, prof.colorings_checked)


# ---------------------------------------------------------------- trees

@dataclass(frozen=True)
class NodeColoring:
    tree: FamilyTree
    colors: Mapping[str, str]

    def __post_init__(self):
        missing = set(self.tree.nodes) - set(self.colors)
        if missing:
            raise TreeError(f"node colouring misses {sorted(missing)[:3]}")
        if set(self.colors.values()) - {RED, BLUE}:
            raise TreeError("node colours must be red or blue")

    def __getitem__(self, t: str) -> str:
        return self.colors[t]

    def to_json(self) -> dict:
        return {t: self.colors[t] for t in self.tree.nodes}


def derive_node_coloring(T: FamilyTree, sample: Sequence[Branch], c: VertexColoring) -> NodeColoring:
    """t is blue iff the sampled branches through t hold an all-blue copy of their own structure.

    The copy is searched inside the branches through t. In a finite sample
    such a copy must use all of them, so t is blue exactly when every
    sampled branch through t is blue.
    """
    sample = [tuple(b) for b in sample]
    if c.size != len(sample):
        raise StructureError("colouring size differs from the sample size")
    if not is_dense(T, sample):
        raise TreeError("sample is not dense: some node lies on no sampled branch")
    D = sample_product(T, sample)
    colors = {}
    for t in T.nodes:
        through = [i for i, b in enumerate(sample) if t in b]
        pattern = induced_substructure(D, through)
        blue = [i for i in through if i in c.blue]
        colors[t] = BLUE if find_embedding(pattern, D, allowed=blue) is not None else RED
    return NodeColoring(T, colors)


@dataclass
class TreeEmbedding:
    """Map from the nodes of a pattern tree into a tree, level by level."""

    source: FamilyTree
    target: FamilyTree
    theta: dict[str, str]

    def problems(self, coloring: NodeColoring | None = None) -> list[str]:
        S, T, th = self.source, self.target, self.theta
        out = []
        if set(th) != set(S.nodes):
            out.append("theta is not total on the pattern")
            return out
        if len(set(th.values())) != len(th):
            out.append("theta is not injective")
        if th[S.root] != T.root:
            out.append("root is not sent to the root")
        for u in S.nodes:
            if S.node_height(u) != T.node_height(th[u]):
                out.append(f"height not preserved at {u}")
            p = S.parent(u)
            if p is not None and T.parent(th[u]) != th[p]:
                out.append(f"successor of {p} not sent to a successor of its image")
            if coloring is not None and coloring[th[u]] != RED:
                out.append(f"image of {u} is not red")
        for u in S.internal():
            t = th[u]
            if T.is_leaf(t):
                out.append(f"internal node {u} sent to a leaf")
                continue
            kids_t = T.children(t)
            try:
                pos = {i: kids_t.index(th[c]) for i, c in enumerate(S.children(u))}
            except ValueError:
                continue
            if not is_partial_iso(S.structure(u), T.structure(t), pos):
                out.append(f"structure at {u} not embedded at {t}")
        return out

    def validate(self, coloring: NodeColoring | None = None) -> None:
        bad = self.problems(coloring)
        if bad:
            raise TreeError("; ".join(bad))

    def to_json(self) -> dict:
        return {u: self.theta[u] for u in self.source.nodes}


@dataclass
class RedSubtreeResult:
    embedding: TreeEmbedding | None
    obstruction: str | None = None
    pattern_node: str | None = None
    blue_copy: bool | None = None
    transcript: list[str] = field(default_factory=list)
    blue_root: bool = False

    @property
    def found(self) -> bool:
        return self.embedding is not None

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "theta": self.embedding.to_json() if self.embedding else None,
            "obstruction": self.obstruction, "pattern_node": self.pattern_node,
            "blue_copy": self.blue_copy, "blue_root": self.blue_root,
            "transcript": list(self.transcript),
        }


def extract_red_subtree(T: FamilyTree, C: NodeColoring, pattern: FamilyTree | None = None) -> RedSubtreeResult:
    """Embed ``pattern`` (default: T itself) into the red part of T, level by level.

    At a selected pair (u, t) the structure at u is searched among the red
    successors of t, least positions first, keeping only choices whose
    successors can in turn be completed. When the search fails, the report
    names the first node whose red successors hold no copy at all and
    whether its blue successors hold one.
    """
    U = T if pattern is None else pattern
    if U.height != T.height:
        raise TreeError("pattern and tree must have the same height")
    if C.tree is not T and set(C.tree.nodes) != set(T.nodes):
        raise TreeError("colouring belongs to another tree")
    if C[T.root] != RED:
        return RedSubtreeResult(None, T.root, U.root, None, [f"root {T.root} is blue"], blue_root=True)

    memo: dict[tuple[str, str], dict[str, str] | None] = {}

    def side(u: str, t: str, color: str) -> list[int]:
        return [i for i, c in enumerate(T.children(t)) if C[c] == color]

    def solve(u: str, t: str) -> dict[str, str] | None:
        key = (u, t)
        if key in memo:
            return memo[key]
        memo[key] = None
        if C[t] != RED:
            return None
        if U.is_leaf(u):
            memo[key] = {u: t}
            return memo[key]
        if T.is_leaf(t):
            return None
        kids_u, kids_t = U.children(u), T.children(t)
        Mu, Mt = U.structure(u), T.structure(t)
        if not Mu.signature.same_symbols(Mt.signature):
            raise TreeError("pattern and tree speak different signatures")
        for emb in iter_embeddings(Mu, Mt, allowed=side(u, t, RED)):
            theta = {u: t}
            for i, j in enumerate(emb):
                sub = solve(kids_u[i], kids_t[j])
                if sub is None:
                    break
                theta.update(sub)
            else:
                memo[key] = theta
                return theta
        return None

    theta = solve(U.root, T.root)
    if theta is not None:
        emb = TreeEmbedding(U, T, theta)
        emb.validate(C)
        return RedSubtreeResult(emb, transcript=[f"{u} -> {theta[u]}" for u in U.nodes])

    # walk down the least red copies to the first node without any
    transcript = []
    u, t = U.root, T.root
    while True:
        Mu, Mt = U.structure(u), T.structure(t)
        red = find_embedding(Mu, Mt, allowed=side(u, t, RED))
        if red is None:
            blue = find_embedding(Mu, Mt, allowed=side(u, t, BLUE)) is not None
            transcript.append(f"{t}: no red copy of the structure at {u}; blue copy {'present' if blue else 'absent'}")
            return RedSubtreeResult(None, t, u, blue, transcript)
        transcript.append(f"{t}: red copy at positions {list(red)}")
        nxt = None
        for i, j in enumerate(red):
            cu, ct = U.children(u)[i], T.children(t)[j]
            if solve(cu, ct) is None:
                nxt = (cu, ct)
                break
        if nxt is None or U.is_leaf(nxt[0]) or T.is_leaf(nxt[1]):
            transcript.append("red copies exist at every node but do not assemble into a subtree")
            return RedSubtreeResult(None, t, u, None, transcript)
        u, t = nxt
