"""Lexer, AST and parser for the toy language (``.tl`` files).

Grammar::

    program  := function*
    function := 'function' IDENT '(' [param (',' param)*] ')' [annot] block
    param    := IDENT [annot]
    annot    := ':' IDENT
    block    := '{' stmt* '}'
    stmt     := 'let' IDENT [annot] '=' expr ';'
              | 'return' expr ';'
              | 'if' '(' expr ')' block ['else' block]
              | IDENT '=' expr ';'
              | expr ';'
    expr     := or
    or       := and ('||' and)*
    and      := cmp ('&&' cmp)*
    cmp      := add [('==' | '!=' | '<' | '<=' | '>' | '>=') add]
    add      := mul (('+' | '-' | '++') mul)*
    mul      := unary (('*' | '/' | '%') unary)*
    unary    := ('!' | '-') unary | primary
    primary  := NUMBER | STRING | 'true' | 'false' | IDENT | IDENT '(' [expr (',' expr)*] ')'
              | '(' expr ')'

``//`` starts a line comment.  Every identifier a function uses must be one of
its parameters or a ``let`` declared earlier in the same function (one scope per
function, no shadowing); calls may refer to any function in the file.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from ..errors import ParseError

KEYWORDS = {"function", "let", "return", "if", "else", "true", "false"}
PAR, FUN, VAR = "PAR", "FUN", "VAR"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>\+\+|==|!=|<=|>=|&&|\|\||[-+*/%<>!=(){},;:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, string, ident, keyword, op, eof
    text: str
    offset: int
    line: int
    col: int
    end: int


def tokenize(source: str, path=None) -> list[Token]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            ch = source[pos]
            msg = "unterminated string literal" if ch == '"' else f"unexpected character {ch!r}"
            raise ParseError(msg, line, pos - line_start + 1, path)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            toks.append(Token(kind, text, pos, line, pos - line_start + 1, m.end()))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", pos, line, pos - line_start + 1, pos))
    return toks


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Loc:
    line: int
    col: int


@dataclass(frozen=True)
class Annotation:
    type_name: str
    start: int  # offset of ':'
    end: int    # offset just past the type name


@dataclass(frozen=True)
class NumLit:
    value: float
    loc: Loc


@dataclass(frozen=True)
class StrLit:
    value: str
    loc: Loc


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Loc


@dataclass(frozen=True)
class VarRef:
    name: str
    loc: Loc


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    loc: Loc


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    loc: Loc


Expr = Union[NumLit, StrLit, BoolLit, VarRef, Unary, Binary, Call]


@dataclass(frozen=True)
class Let:
    name: str
    annotation: Optional[Annotation]
    value: Expr
    insert_at: int
    loc: Loc


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    loc: Loc


@dataclass(frozen=True)
class Return:
    value: Expr
    loc: Loc


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...]
    loc: Loc


@dataclass(frozen=True)
class ExprStmt:
    value: Expr
    loc: Loc


Stmt = Union[Let, Assign, Return, If, ExprStmt]


@dataclass(frozen=True)
class Param:
    name: str
    annotation: Optional[Annotation]
    insert_at: int
    loc: Loc


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[Param, ...]
    annotation: Optional[Annotation]
    body: tuple[Stmt, ...]
    insert_at: int  # just past ')'
    loc: Loc


@dataclass(frozen=True)
class Slot:
    """An annotation position: a parameter, a function's return, or a local."""

    name: str        # unique, e.g. "addNum" (return) or "addNum.start"
    short_name: str  # the identifier as written, fed to the naming model
    kind: str        # PAR | FUN | VAR
    function: str
    annotation: Optional[Annotation]
    insert_at: int


@dataclass(frozen=True)
class Program:
    functions: tuple[Function, ...] = ()

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def slots(self) -> list[Slot]:
        """Annotation slots in order: per function, parameters, return, then locals."""
        out = []
        for f in self.functions:
            for p in f.params:
                out.append(Slot(f"{f.name}.{p.name}", p.name, PAR, f.name, p.annotation, p.insert_at))
            out.append(Slot(f.name, f.name, FUN, f.name, f.annotation, f.insert_at))
            for let in iter_lets(f.body):
                out.append(Slot(f"{f.name}.{let.name}", let.name, VAR, f.name, let.annotation, let.insert_at))
        return out


def iter_lets(stmts):
    for s in stmts:
        if isinstance(s, Let):
            yield s
        elif isinstance(s, If):
            yield from iter_lets(s.then)
            yield from iter_lets(s.orelse)


def slot_name(function: str, ident: str) -> str:
    return f"{function}.{ident}"


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, source, path):
        self.toks = tokenize(source, path)
        self.i = 0
        self.path = path

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok.line, tok.col, self.path)

    def at(self, text, kind=None):
        tok = self.peek()
        return tok.text == text and tok.kind in ((kind,) if kind else ("op", "keyword"))

    def expect(self, text):
        tok = self.peek()
        if not self.at(text):
            found = tok.text or "end of input"
            raise self.error(f"expected {text!r} but found {found!r}")
        return self.take()

    def ident(self, what="identifier"):
        tok = self.peek()
        if tok.kind != "ident":
            found = tok.text or "end of input"
            raise self.error(f"expected {what} but found {found!r}")
        return self.take()

    @staticmethod
    def loc(tok):
        return Loc(tok.line, tok.col)

    def annotation(self):
        if not self.at(":"):
            return None
        colon = self.take()
        ty = self.ident("a type name")
        return Annotation(ty.text, colon.offset, ty.end)

    def program(self):
        funcs = []
        while self.peek().kind != "eof":
            funcs.append(self.function())
        return Program(tuple(funcs))

    def function(self):
        kw = self.expect("function")
        name = self.ident("a function name")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                p = self.ident("a parameter name")
                params.append(Param(p.text, self.annotation(), p.end, self.loc(p)))
                if not self.at(","):
                    break
                self.take()
        close = self.expect(")")
        ann = self.annotation()
        body = self.block()
        return Function(name.text, tuple(params), ann, body, close.end, self.loc(kw))

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise self.error("expected '}' before end of input")
            stmts.append(self.statement())
        self.take()
        return tuple(stmts)

    def statement(self):
        tok = self.peek()
        if self.at("let"):
            self.take()
            name = self.ident("a variable name")
            ann = self.annotation()
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return Let(name.text, ann, value, name.end, self.loc(tok))
        if self.at("return"):
            self.take()
            value = self.expr()
            self.expect(";")
            return Return(value, self.loc(tok))
        if self.at("if"):
            self.take()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = ()
            if self.at("else"):
                self.take()
                orelse = self.block()
            return If(cond, then, orelse, self.loc(tok))
        if tok.kind == "ident" and self.peek(1).text == "=" and self.peek(1).kind == "op":
            self.take()
            self.take()
            value = self.expr()
            self.expect(";")
            return Assign(tok.text, value, self.loc(tok))
        value = self.expr()
        self.expect(";")
        return ExprStmt(value, self.loc(tok))

    def expr(self):
        return self.binary_level(0)

    _LEVELS = (("||",), ("&&",), None, ("+", "-", "++"), ("*", "/", "%"))
    _CMP = ("==", "!=", "<", "<=", ">", ">=")

    def binary_level(self, level):
        if level == len(self._LEVELS):
            return self.unary()
        ops = self._LEVELS[level]
        left = self.binary_level(level + 1)
        if ops is None:  # comparisons do not chain
            if self.peek().kind == "op" and self.peek().text in self._CMP:
                op = self.take()
                right = self.binary_level(level + 1)
                return Binary(op.text, left, right, self.loc(op))
            return left
        while self.peek().kind == "op" and self.peek().text in ops:
            op = self.take()
            right = self.binary_level(level + 1)
            left = Binary(op.text, left, right, self.loc(op))
        return left

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("!", "-"):
            self.take()
            return Unary(tok.text, self.unary(), self.loc(tok))
        return self.primary()

    def primary(self):
        tok = self.peek()
        if tok.kind == "number":
            self.take()
            return NumLit(float(tok.text), self.loc(tok))
        if tok.kind == "string":
            self.take()
            return StrLit(_unescape(tok.text[1:-1]), self.loc(tok))
        if tok.kind == "keyword" and tok.text in ("true", "false"):
            self.take()
            return BoolLit(tok.text == "true", self.loc(tok))
        if tok.kind == "ident":
            self.take()
            if self.at("("):
                self.take()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.expr())
                        if not self.at(","):
                            break
                        self.take()
                self.expect(")")
                return Call(tok.text, tuple(args), self.loc(tok))
            return VarRef(tok.text, self.loc(tok))
        if self.at("("):
            self.take()
            inner = self.expr()
            self.expect(")")
            return inner
        found = tok.text or "end of input"
        raise self.error(f"expected an expression but found {found!r}")


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def parse_program(source: str, path=None) -> Program:
    """Parse toy-language source; raises ParseError with a 1-based location."""
    program = _Parser(source, path).program()
    _check_names(program, path)
    return program


def _check_names(program: Program, path):
    seen = {}
    for f in program.functions:
        if f.name in seen:
            raise ParseError(f"function {f.name!r} is defined twice", f.loc.line, f.loc.col, path)
        seen[f.name] = f
    for f in program.functions:
        scope = set()
        for p in f.params:
            if p.name in scope:
                raise ParseError(f"duplicate parameter {p.name!r}", p.loc.line, p.loc.col, path)
            scope.add(p.name)
        _check_block(f.body, scope, seen, path)


def _check_block(stmts, scope, funcs, path):
    for s in stmts:
        if isinstance(s, Let):
            _check_expr(s.value, scope, funcs, path)
            if s.name in scope:
                raise ParseError(f"{s.name!r} is already declared in this function", s.loc.line, s.loc.col, path)
            scope.add(s.name)
        elif isinstance(s, Assign):
            if s.name not in scope:
                raise ParseError(f"assignment to undeclared variable {s.name!r}", s.loc.line, s.loc.col, path)
            _check_expr(s.value, scope, funcs, path)
        elif isinstance(s, If):
            _check_expr(s.cond, scope, funcs, path)
            _check_block(s.then, scope, funcs, path)
            _check_block(s.orelse, scope, funcs, path)
        else:
            _check_expr(s.value, scope, funcs, path)


def _check_expr(e, scope, funcs, path):
    if isinstance(e, VarRef):
        if e.name not in scope:
            raise ParseError(f"undeclared identifier {e.name!r}", e.loc.line, e.loc.col, path)
    elif isinstance(e, Unary):
        _check_expr(e.operand, scope, funcs, path)
    elif isinstance(e, Binary):
        _check_expr(e.left, scope, funcs, path)
        _check_expr(e.right, scope, funcs, path)
    elif isinstance(e, Call):
        if e.func not in funcs:
            raise ParseError(f"call to undeclared function {e.func!r}", e.loc.line, e.loc.col, path)
        for a in e.args:
            _check_expr(a, scope, funcs, path)


def strip_annotations(program: Program) -> Program:
    """The same program with every type annotation removed."""

    def strip_stmts(stmts):
        out = []
        for s in stmts:
            if isinstance(s, Let):
                s = replace(s, annotation=None)
            elif isinstance(s, If):
                s = replace(s, then=strip_stmts(s.then), orelse=strip_stmts(s.orelse))
            out.append(s)
        return tuple(out)

    return Program(
        tuple(
            replace(
                f,
                params=tuple(replace(p, annotation=None) for p in f.params),
                annotation=None,
                body=strip_stmts(f.body),
            )
            for f in program.functions
        )
    )


def gold_annotations(program: Program) -> dict[str, str]:
    """Slot name -> annotated type name, for the slots that carry an annotation."""
    return {s.name: s.annotation.type_name for s in program.slots() if s.annotation is not None}
