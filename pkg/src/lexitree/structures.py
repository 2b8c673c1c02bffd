"""Finite relational structures over the universe 0..n-1."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import StructureError

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Signature:
    """Ordered list of relation symbols with arities.

    The order is the canonical serialization order.
    """

    name: str
    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        rels = tuple((str(s), int(k)) for s, k in self.relations)
        object.__setattr__(self, "relations", rels)
        if not _IDENT.match(self.name):
            raise StructureError(f"bad signature name {self.name!r}")
        seen = set()
        for sym, arity in rels:
            if not _IDENT.match(sym):
                raise StructureError(f"bad relation symbol {sym!r}")
            if sym in seen:
                raise StructureError(f"duplicate relation symbol {sym!r}")
            if arity < 1:
                raise StructureError(f"arity of {sym!r} must be >= 1, got {arity}")
            seen.add(sym)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.relations)

    def arity(self, symbol: str) -> int:
        for s, k in self.relations:
            if s == symbol:
                return k
        raise StructureError(f"unknown relation symbol {symbol!r}")

    def __contains__(self, symbol: str) -> bool:
        return any(s == symbol for s, _ in self.relations)

    def extend(self, more: Iterable[tuple[str, int]], name: str | None = None) -> Signature:
        more = tuple(more)
        if name is None:
            name = "_".join([self.name] + [s for s, _ in more]) if more else self.name
        return Signature(name, self.relations + more)

    def restrict(self, keep: Iterable[str], name: str | None = None) -> Signature:
        keep = set(keep)
        unknown = keep - set(self.symbols)
        if unknown:
            raise StructureError(f"unknown relation symbols {sorted(unknown)}")
        rels = tuple(r for r in self.relations if r[0] in keep)
        if name is None:
            if rels == self.relations:
                name = self.name
            else:
                name = "_".join([self.name, "only"] + [s for s, _ in rels]) if rels else "set"
        return Signature(name, rels)

    def same_symbols(self, other: Signature) -> bool:
        return sorted(self.relations) == sorted(other.relations)

    def to_json(self) -> dict:
        return {"name": self.name, "relations": [[s, k] for s, k in self.relations]}


GRAPH = Signature("graph", (("E", 2),))
ORDER = Signature("order", (("lt", 2),))
EMPTY = Signature("set", ())

BUILTIN_SIGNATURES = {s.name: s for s in (GRAPH, ORDER, EMPTY)}


class Structure:
    """Immutable finite relational structure.

    ``labels`` and ``origin`` are bookkeeping carried by constructions (the
    product pairing, the branch of a tree product, ...). They do not take
    part in equality.
    """

    __slots__ = ("signature", "size", "tables", "name", "labels", "origin", "_cache")

    def __init__(
        self,
        signature: Signature,
        size: int,
        tables: Mapping[str, Iterable[Sequence[int]]] | None = None,
        *,
        name: str | None = None,
        labels: Sequence[Any] | None = None,
        origin: Any = None,
    ):
        if size < 0:
            raise StructureError(f"universe size must be non-negative, got {size}")
        tables = dict(tables or {})
        unknown = set(tables) - set(signature.symbols)
        if unknown:
            raise StructureError(f"tables for unknown symbols {sorted(unknown)}")
        frozen: dict[str, frozenset[tuple[int, ...]]] = {}
        for sym, arity in signature.relations:
            rows = set()
            for t in tables.get(sym, ()):
                t = tuple(int(v) for v in t)
                if len(t) != arity:
                    raise StructureError(f"{sym}: tuple {t} has length {len(t)}, arity is {arity}")
                for v in t:
                    if not 0 <= v < size:
                        raise StructureError(f"{sym}: element {v} out of range 0..{size - 1}")
                rows.add(t)
            frozen[sym] = frozenset(rows)
        if labels is not None and len(labels) != size:
            raise StructureError("labels must have one entry per element")
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "tables", frozen)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "labels", tuple(labels) if labels is not None else None)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, key, value):
        raise AttributeError("Structure is immutable")

    @property
    def universe(self) -> range:
        return range(self.size)

    def holds(self, symbol: str, tup: Sequence[int]) -> bool:
        return tuple(tup) in self.tables[symbol]

    def table(self, symbol: str) -> list[tuple[int, ...]]:
        return sorted(self.tables[symbol])

    def matrix(self, symbol: str) -> np.ndarray:
        """Boolean n x n mirror of a binary relation."""
        key = ("matrix", symbol)
        if key not in self._cache:
            if self.signature.arity(symbol) != 2:
                raise StructureError(f"{symbol} is not binary")
            m = np.zeros((self.size, self.size), dtype=bool)
            for a, b in self.tables[symbol]:
                m[a, b] = True
            m.setflags(write=False)
            self._cache[key] = m
        return self._cache[key]

    def incidence(self) -> list[list[tuple[str, tuple[int, ...]]]]:
        """Per element, every (symbol, tuple) it occurs in."""
        if "incidence" not in self._cache:
            inc: list[list[tuple[str, tuple[int, ...]]]] = [[] for _ in range(self.size)]
            for sym in self.signature.symbols:
                for t in sorted(self.tables[sym]):
                    for v in sorted(set(t)):
                        inc[v].append((sym, t))
            self._cache["incidence"] = inc
        return self._cache["incidence"]

    def _key(self):
        return (
            tuple(sorted(self.signature.relations)),
            self.size,
            tuple(sorted((s, tuple(sorted(t))) for s, t in self.tables.items())),
        )

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if "hash" not in self._cache:
            self._cache["hash"] = hash(self._key())
        return self._cache["hash"]

    def __repr__(self):
        counts = ", ".join(f"{s}:{len(self.tables[s])}" for s in self.signature.symbols)
        label = f"{self.name} " if self.name else ""
        return f"<Structure {label}n={self.size} [{counts}]>"

    def with_name(self, name: str | None) -> Structure:
        return Structure(self.signature, self.size, self.tables, name=name,
                         labels=self.labels, origin=self.origin)

    def relabel(self, perm: Sequence[int]) -> Structure:
        """Image of the structure under ``i -> perm[i]``."""
        if sorted(perm) != list(range(self.size)):
            raise StructureError("relabel needs a permutation of the universe")
        tables = {s: [tuple(perm[v] for v in t) for t in rows] for s, rows in self.tables.items()}
        labels = None
        if self.labels is not None:
            labels = [None] * self.size
            for i, p in enumerate(perm):
                labels[p] = self.labels[i]
        return Structure(self.signature, self.size, tables, name=self.name,
                         labels=labels, origin=self.origin)

    def to_json(self) -> dict:
        out: dict[str, Any] = {}
        if self.name:
            out["name"] = self.name
        out["signature"] = self.signature.to_json()
        out["universe"] = self.size
        out["tables"] = {s: [list(t) for t in self.table(s)] for s in self.signature.symbols}
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> Structure:
        sig = data["signature"]
        signature = Signature(sig["name"], tuple((s, k) for s, k in sig["relations"]))
        return cls(signature, int(data["universe"]), data.get("tables", {}), name=data.get("name"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=False)


@dataclass(frozen=True)
class PartialIso:
    """Finite partial map between two structures; validity is checked, not assumed."""

    source: Structure
    target: Structure
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted((int(a), int(b)) for a, b in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        dom = [a for a, _ in pairs]
        img = [b for _, b in pairs]
        if len(set(dom)) != len(dom) or len(set(img)) != len(img):
            raise StructureError("pairs do not form an injective partial function")
        for a, b in pairs:
            if not (0 <= a < self.source.size and 0 <= b < self.target.size):
                raise StructureError(f"pair {(a, b)} out of range")

    @property
    def mapping(self) -> dict[int, int]:
        return dict(self.pairs)

    @property
    def domain(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.pairs)

    @property
    def image(self) -> tuple[int, ...]:
        return tuple(b for _, b in self.pairs)

    def __len__(self):
        return len(self.pairs)

    def is_valid(self) -> bool:
        return is_partial_iso(self.source, self.target, self.mapping)

    def extended(self, a: int, b: int) -> PartialIso:
        return PartialIso(self.source, self.target, self.pairs + ((a, b),))

    def inverse(self) -> PartialIso:
        return PartialIso(self.target, self.source, tuple((b, a) for a, b in self.pairs))


def is_partial_iso(M: Structure, N: Structure, mapping: Mapping[int, int]) -> bool:
    """True iff ``mapping`` is injective and preserves every relation both ways."""
    if not M.signature.same_symbols(N.signature):
        return False
    if len(set(mapping.values())) != len(mapping):
        return False
    image = set(mapping.values())
    for sym in M.signature.symbols:
        inside = 0
        for t in M.tables[sym]:
            if all(v in mapping for v in t):
                inside += 1
                if tuple(mapping[v] for v in t) not in N.tables[sym]:
                    return False
        if inside != sum(1 for t in N.tables[sym] if all(v in image for v in t)):
            return False
    return True


def is_isomorphism(M: Structure, N: Structure, perm: Sequence[int]) -> bool:
    if M.size != N.size or len(perm) != M.size or sorted(perm) != list(range(N.size)):
        return False
    return is_partial_iso(M, N, dict(enumerate(perm)))


def induced_substructure(M: Structure, elements: Iterable[int]) -> Structure:
    """Restriction to ``elements``, relabelled 0.. by increasing original index."""
    keep = sorted(set(int(e) for e in elements))
    for e in keep:
        if not 0 <= e < M.size:
            raise StructureError(f"element {e} out of range 0..{M.size - 1}")
    index = {e: i for i, e in enumerate(keep)}
    tables = {
        s: [tuple(index[v] for v in t) for t in rows if all(v in index for v in t)]
        for s, rows in M.tables.items()
    }
    labels = [M.labels[e] for e in keep] if M.labels is not None else None
    return Structure(M.signature, len(keep), tables, labels=labels, origin=M.origin)


def reduct(M: Structure, keep: Iterable[str]) -> Structure:
    sig = M.signature.restrict(keep)
    return Structure(sig, M.size, {s: M.tables[s] for s in sig.symbols},
                     name=M.name, labels=M.labels, origin=M.origin)


def expand(M: Structure, symbol: str, arity: int, rows: Iterable[Sequence[int]],
           name: str | None = None) -> Structure:
    """Add one relation with the given table."""
    sig = M.signature.extend([(symbol, arity)], name=name)
    tables = dict(M.tables)
    tables[symbol] = rows
    return Structure(sig, M.size, tables, name=M.name, labels=M.labels, origin=M.origin)


def reorder_signature(M: Structure, signature: Signature) -> Structure:
    """Same structure presented over a permuted signature."""
    if not signature.same_symbols(M.signature):
        raise StructureError("signatures differ in symbols or arities")
    return Structure(signature, M.size, M.tables, name=M.name, labels=M.labels, origin=M.origin)


def full_relation(n: int, arity: int = 2) -> list[tuple[int, ...]]:
    from itertools import product

    return list(product(range(n), repeat=arity))


def to_dot(M: Structure) -> str:
    """Graphviz rendering; only binary signatures are supported."""
    styles = ["solid", "dashed", "dotted", "bold", "tapered"]
    colors = ["black", "red", "blue", "darkgreen", "purple", "orange", "brown"]
    for sym, k in M.signature.relations:
        if k != 2:
            raise StructureError(f"DOT export needs a binary-only signature ({sym} has arity {k})")
    lines = [f'digraph "{M.name or M.signature.name}" {{']
    for v in M.universe:
        label = v if M.labels is None else f"{v}: {M.labels[v]}"
        lines.append(f'  {v} [label="{label}"];')
    for i, sym in enumerate(M.signature.symbols):
        style = styles[i % len(styles)]
        color = colors[i % len(colors)]
        for a, b in M.table(sym):
            lines.append(f'  {a} -> {b} [label="{sym}", style={style}, color={color}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
