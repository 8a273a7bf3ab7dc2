"""Textual rewriting of toy sources: removing and inserting annotations.

Edits are made at recorded offsets so formatting and comments elsewhere in the
file are preserved byte for byte.
"""
from __future__ import annotations

from typing import Mapping

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
    parse_program,
)


def _apply(source: str, edits) -> str:
    """Apply (start, end, replacement) edits; spans must not overlap."""
    out, pos = [], 0
    for start, end, text in sorted(edits, key=lambda e: (e[0], e[1])):
        out.append(source[pos:start])
        out.append(text)
        pos = end
    out.append(source[pos:])
    return "".join(out)


def strip_source(source: str, program: Program | None = None) -> str:
    """Source text with every ``: type`` annotation removed."""
    program = program or parse_program(source)
    edits = [(s.annotation.start, s.annotation.end, "") for s in program.slots() if s.annotation]
    return _apply(source, edits)


def annotate_source(source: str, typing: Mapping[str, str], program: Program | None = None) -> str:
    """Insert (or overwrite) annotations for the slots named in `typing`."""
    program = program or parse_program(source)
    edits = []
    for s in program.slots():
        if s.name not in typing:
            continue
        if s.annotation is not None:
            edits.append((s.annotation.start, s.annotation.end, f": {typing[s.name]}"))
        else:
            edits.append((s.insert_at, s.insert_at, f": {typing[s.name]}"))
    return _apply(source, edits)


_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
         "+": 4, "-": 4, "++": 4, "*": 5, "/": 5, "%": 5}


def _fmt_expr(e, prec=0) -> str:
    if isinstance(e, NumLit):
        return repr(int(e.value)) if e.value.is_integer() else repr(e.value)
    if isinstance(e, StrLit):
        return '"' + e.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_fmt_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        return e.op + _fmt_expr(e.operand, 6)
    if isinstance(e, Binary):
        p = _PREC[e.op]
        # left-associative; comparisons do not chain so both sides bind tighter
        left = _fmt_expr(e.left, p + 1 if p == 3 else p)
        right = _fmt_expr(e.right, p + 1)
        text = f"{left} {e.op} {right}"
        return f"({text})" if p < prec else text
    raise TypeError(f"unknown expression {e!r}")


def _ann(a):
    return f": {a.type_name}" if a is not None else ""


def _fmt_block(stmts, indent) -> list[str]:
    pad = "    " * indent
    lines = []
    for s in stmts:
        if isinstance(s, Let):
            lines.append(f"{pad}let {s.name}{_ann(s.annotation)} = {_fmt_expr(s.value)};")
        elif isinstance(s, Assign):
            lines.append(f"{pad}{s.name} = {_fmt_expr(s.value)};")
        elif isinstance(s, Return):
            lines.append(f"{pad}return {_fmt_expr(s.value)};")
        elif isinstance(s, ExprStmt):
            lines.append(f"{pad}{_fmt_expr(s.value)};")
        elif isinstance(s, If):
            lines.append(f"{pad}if ({_fmt_expr(s.cond)}) {{")
            lines.extend(_fmt_block(s.then, indent + 1))
            if s.orelse:
                lines.append(f"{pad}}} else {{")
                lines.extend(_fmt_block(s.orelse, indent + 1))
            lines.append(f"{pad}}}")
    return lines


def format_program(program: Program) -> str:
    """Canonical source for a program; parsing it gives back the same structure."""
    chunks = []
    for f in program.functions:
        params = ", ".join(p.name + _ann(p.annotation) for p in f.params)
        lines = [f"function {f.name}({params}){_ann(f.annotation)} {{"]
        lines.extend(_fmt_block(f.body, 1))
        lines.append("}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")
