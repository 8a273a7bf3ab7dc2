"""Text format for logical constraints.

Grammar (``and`` binds tighter than ``or``; ``not`` binds tightest)::

    file    := (formula ';')* formula? EOF
    formula := conj ('or' conj)*
    conj    := unary ('and' unary)*
    unary   := 'not' unary | '(' formula ')' | IDENT 'is' IDENT

Identifiers may contain letters, digits, ``_``, ``$`` and ``.`` (qualified slot
names such as ``addNum.start``).  ``#`` starts a comment that runs to the end
of the line.  A file holds zero or more formulas separated by ``;``; consumers
conjoin them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import ParseError
from .logic import And, Constraint, IdentifierSet, Is, Not, Or, TypeUniverse

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)|(?P<punct>[();])|(?P<word>[A-Za-z_$][A-Za-z0-9_$.]*)"
)
_KEYWORDS = {"is", "not", "and", "or"}


@dataclass
class _Tok:
    kind: str  # 'word', '(', ')', ';', 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str, path=None) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, path)
        kind = m.lastgroup
        if kind == "punct":
            toks.append(_Tok(m.group(), m.group(), line, pos - line_start + 1))
        elif kind == "word":
            toks.append(_Tok("word", m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, toks, resolve_var, resolve_type, path):
        self.toks = toks
        self.i = 0
        self.resolve_var = resolve_var
        self.resolve_type = resolve_type
        self.path = path

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok.line, tok.col, self.path)

    def is_kw(self, word):
        tok = self.peek()
        return tok.kind == "word" and tok.text == word

    def file(self) -> list[Constraint]:
        out = []
        while self.peek().kind != "eof":
            if self.peek().kind == ";":
                self.take()
                continue
            out.append(self.formula())
            if self.peek().kind not in (";", "eof"):
                raise self.error(f"expected ';' or end of input, found {self.peek().text!r}")
        return out

    def formula(self):
        node = self.conj()
        while self.is_kw("or"):
            self.take()
            node = Or(node, self.conj())
        return node

    def conj(self):
        node = self.unary()
        while self.is_kw("and"):
            self.take()
            node = And(node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if self.is_kw("not"):
            self.take()
            return Not(self.unary())
        if tok.kind == "(":
            self.take()
            node = self.formula()
            if self.peek().kind != ")":
                raise self.error("expected ')'")
            self.take()
            return node
        if tok.kind == "word" and tok.text not in _KEYWORDS:
            self.take()
            if not self.is_kw("is"):
                raise self.error(f"expected 'is' after {tok.text!r}")
            self.take()
            ty = self.peek()
            if ty.kind != "word" or ty.text in _KEYWORDS:
                raise self.error("expected a type name after 'is'")
            self.take()
            try:
                v = self.resolve_var(tok.text)
            except KeyError as exc:
                raise self.error(str(exc.args[0]), tok) from None
            try:
                t = self.resolve_type(ty.text)
            except KeyError as exc:
                raise self.error(str(exc.args[0]), ty) from None
            return Is(v, t)
        found = tok.text or "end of input"
        raise self.error(f"expected an atom, 'not' or '(' but found {found!r}")


@dataclass
class ParsedConstraints:
    formulas: list[Constraint]
    ids: IdentifierSet | None
    universe: TypeUniverse


def _interning_resolver(names: list[str]) -> Callable[[str], int]:
    index: dict[str, int] = {}

    def resolve(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    return resolve


def parse_constraints(
    text: str,
    ids: Optional[IdentifierSet] = None,
    universe: Optional[TypeUniverse] = None,
    path=None,
) -> ParsedConstraints:
    """Parse a constraint file.

    With `ids`/`universe` given, names are resolved against them and unknown
    names are syntax errors.  Otherwise identifiers (and types) are numbered in
    order of first appearance.
    """
    var_names: list[str] = []
    type_names: list[str] = []
    resolve_var = ids.index if ids is not None else _interning_resolver(var_names)
    resolve_type = universe.index if universe is not None else _interning_resolver(type_names)
    formulas = _Parser(_tokenize(text, path), resolve_var, resolve_type, path).file()
    if ids is None:
        ids = IdentifierSet(tuple(var_names)) if var_names else None
    if universe is None:
        if not type_names:
            raise ParseError("no type universe given and none can be inferred", 1, 1, path)
        universe = TypeUniverse(tuple(type_names))
    return ParsedConstraints(formulas, ids, universe)


def parse_formula(text: str, ids: IdentifierSet, universe: TypeUniverse) -> Constraint:
    parsed = parse_constraints(text, ids, universe)
    if len(parsed.formulas) != 1:
        raise ParseError(f"expected exactly one formula, found {len(parsed.formulas)}", 1, 1)
    return parsed.formulas[0]


_PREC = {Or: 1, And: 2, Not: 3, Is: 4}


def format_constraint(e: Constraint, ids: IdentifierSet, universe: TypeUniverse) -> str:
    """Render `e` with the minimum parentheses that re-parse to the same tree."""

    def fmt(node, min_prec):
        prec = _PREC[type(node)]
        if isinstance(node, Is):
            text = f"{ids.names[node.var]} is {universe.names[node.type]}"
        elif isinstance(node, Not):
            text = "not " + fmt(node.child, 3)
        else:
            op = "and" if isinstance(node, And) else "or"
            # operators parse left-associatively, so a same-precedence right child needs parens
            text = f"{fmt(node.left, prec)} {op} {fmt(node.right, prec + 1)}"
        return f"({text})" if prec < min_prec else text

    return fmt(e, 0)


def format_constraints(
    formulas: Sequence[Constraint], ids: IdentifierSet, universe: TypeUniverse, header: str = ""
) -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    lines += [format_constraint(e, ids, universe) + ";" for e in formulas]
    return "\n".join(lines) + "\n"
