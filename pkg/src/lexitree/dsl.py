"""Text format for signatures and structures.

    file        := (sig_decl | struct_decl)*
    sig_decl    := "signature" IDENT "{" (IDENT "/" INT ";")* "}"
    struct_decl := "structure" IDENT ":" IDENT "{" "universe" INT ";"
                   (IDENT "=" "{" tuple_list? "}" ";")* "}"

``#`` starts a line comment. The ``;`` after the last table of a structure
may be omitted. The signatures ``graph`` (E/2), ``order`` (lt/2) and ``set``
(no relations) are predeclared.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DSLSyntaxError, StructureError
from .structures import BUILTIN_SIGNATURES, Signature, Structure

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[{}();:=,/])|(?P<bad>.)"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            continue
        elif kind == "bad":
            raise DSLSyntaxError(f"unexpected character {m.group()!r}", line, col)
        else:
            toks.append(_Tok(kind, m.group(), line, col))
    toks.append(_Tok("eof", "", line, len(text) - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.signatures: dict[str, Signature] = dict(BUILTIN_SIGNATURES)
        self.structures: dict[str, Structure] = {}

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def fail(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise DSLSyntaxError(message, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = repr(text) if text else kind
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            self.fail(f"expected {want}, got {got}")
        self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == text:
            self.pos += 1
            return True
        return False

    def parse_file(self):
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "signature":
                self.sig_decl()
            elif tok.kind == "ident" and tok.text == "structure":
                self.struct_decl()
            else:
                self.fail(f"expected 'signature' or 'structure', got {tok.text!r}")

    def sig_decl(self):
        self.expect("ident", "signature")
        name_tok = self.expect("ident")
        self.expect("punct", "{")
        rels = []
        seen = set()
        while not self.accept("}"):
            sym = self.expect("ident")
            if sym.text in seen:
                self.fail(f"duplicate relation symbol {sym.text!r}", sym)
            seen.add(sym.text)
            self.expect("punct", "/")
            arity = self.expect("int")
            if int(arity.text) < 1:
                self.fail("arity must be at least 1", arity)
            self.expect("punct", ";")
            rels.append((sym.text, int(arity.text)))
        sig = Signature(name_tok.text, tuple(rels))
        old = self.signatures.get(sig.name)
        if old is not None and old != sig:
            self.fail(f"signature {sig.name!r} redeclared differently", name_tok)
        self.signatures[sig.name] = sig

    def struct_decl(self):
        self.expect("ident", "structure")
        name_tok = self.expect("ident")
        self.expect("punct", ":")
        sig_tok = self.expect("ident")
        sig = self.signatures.get(sig_tok.text)
        if sig is None:
            self.fail(f"unknown signature {sig_tok.text!r}", sig_tok)
        self.expect("punct", "{")
        self.expect("ident", "universe")
        n = int(self.expect("int").text)
        self.expect("punct", ";")
        tables: dict[str, list[tuple[int, ...]]] = {}
        while not self.accept("}"):
            sym = self.expect("ident")
            if sym.text not in sig:
                self.fail(f"relation {sym.text!r} not in signature {sig.name!r}", sym)
            if sym.text in tables:
                self.fail(f"duplicate relation symbol {sym.text!r}", sym)
            arity = sig.arity(sym.text)
            self.expect("punct", "=")
            self.expect("punct", "{")
            rows = []
            if not self.accept("}"):
                while True:
                    rows.append(self.tuple_(arity, n, sym.text))
                    if self.accept("}"):
                        break
                    self.expect("punct", ",")
            tables[sym.text] = rows
            if not self.accept(";") and not (self.peek().kind == "punct" and self.peek().text == "}"):
                self.expect("punct", ";")
        if name_tok.text in self.structures:
            self.fail(f"structure {name_tok.text!r} declared twice", name_tok)
        self.structures[name_tok.text] = Structure(sig, n, tables, name=name_tok.text)

    def tuple_(self, arity: int, n: int, sym: str) -> tuple[int, ...]:
        start = self.expect("punct", "(")
        vals = []
        while True:
            tok = self.expect("int")
            v = int(tok.text)
            if v >= n:
                self.fail(f"element {v} out of range for universe {n}", tok)
            vals.append(v)
            if self.accept(")"):
                break
            self.expect("punct", ",")
        if len(vals) != arity:
            self.fail(f"arity mismatch: {sym} has arity {arity}, tuple has {len(vals)} entries", start)
        return tuple(vals)


def parse_file(text: str) -> dict[str, Structure]:
    """All structures declared in ``text``, by name, in declaration order."""
    p = _Parser(text)
    p.parse_file()
    return p.structures


def parse_structure(text: str) -> Structure:
    """The single structure declared in ``text``."""
    structures = parse_file(text)
    if len(structures) != 1:
        raise StructureError(f"expected exactly one structure, found {len(structures)}")
    return next(iter(structures.values()))


def serialize(M: Structure, name: str | None = None) -> str:
    sig = M.signature
    lines = []
    if sig.name in BUILTIN_SIGNATURES and BUILTIN_SIGNATURES[sig.name] != sig:
        sig = Signature(f"{sig.name}_custom", sig.relations)
    if BUILTIN_SIGNATURES.get(sig.name) != sig:
        body = " ".join(f"{s}/{k};" for s, k in sig.relations)
        lines.append(f"signature {sig.name} {{ {body} }}" if body else f"signature {sig.name} {{ }}")
    lines.append(f"structure {name or M.name or 'M'}: {sig.name} {{")
    lines.append(f"  universe {M.size};")
    for s in sig.symbols:
        rows = ", ".join("(" + ",".join(map(str, t)) + ")" for t in M.table(s))
        lines.append(f"  {s} = {{ {rows} }};" if rows else f"  {s} = {{ }};")
    lines.append("}")
    return "\n".join(lines) + "\n"
