"""Logical-constraint generation for toy programs.

Each expression is summarised by a map from type name to the formula under
which the expression has that type (``TRUE`` when it has it unconditionally; a
missing key means it can never have it).  Emission rules:

* a variable has type t exactly when its slot does: ``x is t``;
* a literal has its own type unconditionally;
* an operator combines operand maps row by row through the operator table, so
  ``a + b`` has type number under ``a:number and b:number`` and type string
  under ``a:string and b:string``; comparisons require equal operand types;
* a value flowing into a slot (``let``, assignment, ``return``, call argument)
  emits ``or_t (slot is t and value has t)``;
* an ``if`` condition emits the formula for the value being boolean, and an
  expression statement emits the disjunction of its map.

The bundle is the conjunction of every emission.  Slots never mentioned get no
atoms, leaving them to the natural channel.  The abstain type (``any``) never
appears in an atom.

These rules are a reconstruction of usage-based hints (which operators pin a
type, which admit several) fixed by the operator table in ``checker``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..dsl import format_constraints, parse_constraints
from ..errors import ConstraintGenerationError
from ..logic import And, Constraint, IdentifierSet, Is, Or, TypeUniverse, conjoin, disjoin
from .checker import ANY, BINARY_TABLE, COMPARISONS, LITERAL_TYPES, UNARY_TABLE
from .syntax import (
    Assign,
    Binary,
    Call,
    ExprStmt,
    If,
    Let,
    Program,
    Return,
    Unary,
    VarRef,
    slot_name,
)

TRUE = True
DEFAULT_UNIVERSE = TypeUniverse(("number", "string", "boolean", ANY))
BUNDLE_VERSION = 1


def _and(a, b):
    if a is TRUE:
        return b
    if b is TRUE:
        return a
    return And(a, b)


def _or(parts):
    parts = list(parts)
    if any(p is TRUE for p in parts):
        return TRUE
    return disjoin(parts) if parts else None


@dataclass(frozen=True)
class ConstraintBundle:
    ids: IdentifierSet
    universe: TypeUniverse
    constraint: Optional[Constraint]
    kinds: tuple[str, ...]
    short_names: tuple[str, ...]
    emissions: tuple[Constraint, ...] = ()

    def __post_init__(self):
        if len(self.kinds) != len(self.ids) or len(self.short_names) != len(self.ids):
            raise ValueError("one kind and one short name per identifier")

    @property
    def slot_names(self) -> tuple[str, ...]:
        return self.ids.names

    def constrained_slots(self) -> set[int]:
        from ..logic import atoms

        return {a.var for a in atoms(self.constraint)} if self.constraint is not None else set()

    # -- serialisation --------------------------------------------------------

    def to_dsl(self) -> str:
        parts = list(self.emissions) or ([self.constraint] if self.constraint is not None else [])
        return format_constraints(parts, self.ids, self.universe, header="generated constraints")

    def sidecar(self) -> dict:
        return {
            "version": BUNDLE_VERSION,
            "identifiers": list(self.ids.names),
            "kinds": list(self.kinds),
            "short_names": list(self.short_names),
            "types": list(self.universe.names),
        }

    def save(self, dsl_path, sidecar_path=None) -> None:
        dsl_path = Path(dsl_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else dsl_path.with_suffix(".json")
        dsl_path.write_text(self.to_dsl(), encoding="utf-8")
        sidecar_path.write_text(json.dumps(self.sidecar(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, dsl_path, sidecar_path=None) -> ConstraintBundle:
        dsl_path = Path(dsl_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else dsl_path.with_suffix(".json")
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
        if meta.get("version") != BUNDLE_VERSION:
            raise ConstraintGenerationError(f"unsupported bundle version {meta.get('version')!r}")
        ids = IdentifierSet(tuple(meta["identifiers"]))
        universe = TypeUniverse(tuple(meta["types"]))
        parsed = parse_constraints(dsl_path.read_text(encoding="utf-8"), ids, universe, path=str(dsl_path))
        formulas = tuple(parsed.formulas)
        return cls(
            ids,
            universe,
            conjoin(formulas) if formulas else None,
            tuple(meta["kinds"]),
            tuple(meta["short_names"]),
            formulas,
        )


def generate_constraints(program: Program, universe: TypeUniverse = DEFAULT_UNIVERSE) -> ConstraintBundle:
    """Logical constraints implied by how each slot is used.  Annotations are ignored."""
    slots = program.slots()
    if not slots:
        raise ConstraintGenerationError("program has no annotation slots")
    ids = IdentifierSet(tuple(s.name for s in slots))
    gen = _Generator(program, universe, ids)
    for f in program.functions:
        gen.function = f
        gen.block(f.body)
    emissions = tuple(gen.emissions)
    return ConstraintBundle(
        ids,
        universe,
        conjoin(emissions) if emissions else None,
        tuple(s.kind for s in slots),
        tuple(s.short_name for s in slots),
        emissions,
    )


class _Generator:
    def __init__(self, program, universe, ids):
        self.program = program
        self.universe = universe
        self.ids = ids
        self.concrete = [t for t in universe.names if t != ANY]
        self.emissions = []
        self.function = None

    def fail(self, msg, node):
        raise ConstraintGenerationError(f"{node.loc.line}:{node.loc.col}: {msg}")

    def emit(self, formula, node, what):
        if formula is None:
            self.fail(f"{what} can never be well typed", node)
        if formula is not TRUE:
            self.emissions.append(formula)

    def slot(self, name):
        try:
            return self.ids.index(name)
        except KeyError:
            raise ConstraintGenerationError(f"undeclared identifier {name!r}") from None

    def slot_map(self, name):
        v = self.slot(name)
        return {t: Is(v, self.universe.index(t)) for t in self.concrete}

    def flow(self, target, value):
        v = self.slot(target)
        return _or(
            _and(Is(v, self.universe.index(t)), value[t]) for t in self.concrete if t in value
        )

    def block(self, stmts):
        fname = self.function.name
        for s in stmts:
            if isinstance(s, (Let, Assign)):
                self.emit(self.flow(slot_name(fname, s.name), self.expr(s.value)), s, f"assignment to {s.name!r}")
            elif isinstance(s, Return):
                self.emit(self.flow(fname, self.expr(s.value)), s, "return value")
            elif isinstance(s, If):
                cond = self.expr(s.cond)
                self.emit(cond.get("boolean"), s, "if condition")
                self.block(s.then)
                self.block(s.orelse)
            elif isinstance(s, ExprStmt):
                self.emit(_or(self.expr(s.value).values()), s, "expression")

    def expr(self, e) -> dict:
        if type(e) in LITERAL_TYPES:
            t = LITERAL_TYPES[type(e)]
            return {t: TRUE} if t in self.concrete else {}
        if isinstance(e, VarRef):
            return self.slot_map(slot_name(self.function.name, e.name))
        if isinstance(e, Unary):
            operand = self.expr(e.operand)
            return self._combine(
                ((arg, res) for arg, res in UNARY_TABLE[e.op]),
                lambda arg: operand.get(arg),
            )
        if isinstance(e, Binary):
            left, right = self.expr(e.left), self.expr(e.right)
            if e.op in COMPARISONS:
                rows = [(t, t, "boolean") for t in self.concrete]
            else:
                rows = BINARY_TABLE[e.op]
            out = {}
            for a, b, res in rows:
                if a in left and b in right and res in self.concrete:
                    out.setdefault(res, []).append(_and(left[a], right[b]))
            return {t: f for t, parts in out.items() if (f := _or(parts)) is not None}
        if isinstance(e, Call):
            try:
                callee = self.program.function(e.func)
            except KeyError:
                self.fail(f"call to undeclared function {e.func!r}", e)
            if len(e.args) != len(callee.params):
                self.fail(f"{e.func} expects {len(callee.params)} arguments, got {len(e.args)}", e)
            for p, a in zip(callee.params, e.args):
                self.emit(self.flow(slot_name(callee.name, p.name), self.expr(a)), e, f"argument {p.name!r} of {e.func}")
            return self.slot_map(callee.name)
        raise TypeError(f"unknown expression {e!r}")

    def _combine(self, rows, lookup):
        out = {}
        for arg, res in rows:
            f = lookup(arg)
            if f is not None and res in self.concrete:
                out.setdefault(res, []).append(f)
        return {t: f for t, parts in out.items() if (f := _or(parts)) is not None}
