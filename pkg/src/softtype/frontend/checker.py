"""Reference type checker for annotated toy programs.

Plain syntax-directed checking with no inference beyond literals: every slot
must be annotated, and each expression's type is read off the operator table.
It defines which gold typings are well formed.  The abstain type (``any``) is
accepted only on slots whose value is never used, since it satisfies no
operator and no flow.
"""
from __future__ import annotations

from ..errors import ConstraintGenerationError, ParseError
from .syntax import (
    Assign,
    Binary,
    BoolLit,
    Call,
    ExprStmt,
    If,
    Let,
    NumLit,
    Program,
    Return,
    StrLit,
    Unary,
    VarRef,
    slot_name,
)

NUMBER, STRING, BOOLEAN, ANY = "number", "string", "boolean", "any"

# operator -> allowed (left, right, result) rows; comparisons are handled apart
BINARY_TABLE = {
    "+": ((NUMBER, NUMBER, NUMBER), (STRING, STRING, STRING)),
    "-": ((NUMBER, NUMBER, NUMBER),),
    "*": ((NUMBER, NUMBER, NUMBER),),
    "/": ((NUMBER, NUMBER, NUMBER),),
    "%": ((NUMBER, NUMBER, NUMBER),),
    "++": ((STRING, STRING, STRING),),
    "&&": ((BOOLEAN, BOOLEAN, BOOLEAN),),
    "||": ((BOOLEAN, BOOLEAN, BOOLEAN),),
}
UNARY_TABLE = {"-": ((NUMBER, NUMBER),), "!": ((BOOLEAN, BOOLEAN),)}
COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
LITERAL_TYPES = {NumLit: NUMBER, StrLit: STRING, BoolLit: BOOLEAN}


class TypeCheckError(ConstraintGenerationError):
    pass


def _fail(msg, node):
    loc = node.loc
    raise TypeCheckError(f"{loc.line}:{loc.col}: {msg}")


def check_program(program: Program, concrete=(NUMBER, STRING, BOOLEAN)) -> dict[str, str]:
    """Type-check a fully annotated program; return its gold typing (slot -> type).

    `concrete` lists the types comparisons may range over.
    """
    typing = {}
    for slot in program.slots():
        if slot.annotation is None:
            raise TypeCheckError(f"slot {slot.name!r} is not annotated")
        typing[slot.name] = slot.annotation.type_name
    for f in program.functions:
        _Checker(program, typing, f, concrete).block(f.body)
    return typing


class _Checker:
    def __init__(self, program, typing, function, concrete):
        self.program = program
        self.typing = typing
        self.f = function
        self.concrete = concrete

    def slot_type(self, ident):
        return self.typing[slot_name(self.f.name, ident)]

    def block(self, stmts):
        for s in stmts:
            if isinstance(s, Let):
                self.flow(self.slot_type(s.name), self.expr(s.value), s)
            elif isinstance(s, Assign):
                self.flow(self.slot_type(s.name), self.expr(s.value), s)
            elif isinstance(s, Return):
                self.flow(self.typing[self.f.name], self.expr(s.value), s)
            elif isinstance(s, If):
                if self.expr(s.cond) != BOOLEAN:
                    _fail("if condition must be boolean", s)
                self.block(s.then)
                self.block(s.orelse)
            elif isinstance(s, ExprStmt):
                self.expr(s.value)

    def flow(self, target, source, node):
        if target != source:
            _fail(f"cannot use a {source} where a {target} is expected", node)

    def expr(self, e):
        if type(e) in LITERAL_TYPES:
            return LITERAL_TYPES[type(e)]
        if isinstance(e, VarRef):
            t = self.slot_type(e.name)
            if t == ANY:
                _fail(f"{e.name!r} has the abstain type and cannot be used", e)
            return t
        if isinstance(e, Unary):
            t = self.expr(e.operand)
            for arg, res in UNARY_TABLE[e.op]:
                if t == arg:
                    return res
            _fail(f"operator {e.op!r} does not apply to {t}", e)
        if isinstance(e, Binary):
            lt, rt = self.expr(e.left), self.expr(e.right)
            if e.op in COMPARISONS:
                if lt != rt or lt not in self.concrete:
                    _fail(f"cannot compare {lt} with {rt}", e)
                return BOOLEAN
            for a, b, res in BINARY_TABLE[e.op]:
                if (lt, rt) == (a, b):
                    return res
            _fail(f"operator {e.op!r} does not apply to {lt} and {rt}", e)
        if isinstance(e, Call):
            callee = self.program.function(e.func)
            if len(e.args) != len(callee.params):
                _fail(f"{e.func} expects {len(callee.params)} arguments, got {len(e.args)}", e)
            for p, a in zip(callee.params, e.args):
                self.flow(self.typing[slot_name(callee.name, p.name)], self.expr(a), e)
            ret = self.typing[callee.name]
            if ret == ANY:
                _fail(f"result of {e.func!r} has the abstain type and cannot be used", e)
            return ret
        raise TypeError(f"unknown expression {e!r}")


def is_well_typed(program: Program) -> bool:
    try:
        check_program(program)
    except (TypeCheckError, ParseError):
        return False
    return True
