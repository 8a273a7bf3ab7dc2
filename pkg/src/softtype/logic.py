"""Discrete side of the type-constraint language.

Identifiers and types are referred to by 0-based integer index everywhere in
the numeric core; names are resolved once, at the frontend / DSL boundary.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import EnumerationCapError, MalformedConstraintError

DEFAULT_ENUMERATION_CAP = 10**6


def _check_names(names: Sequence[str], what: str) -> tuple[str, ...]:
    names = tuple(names)
    if not names:
        raise ValueError(f"{what} must be nonempty")
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"{what} has duplicate names: {dup}")
    return names


@dataclass(frozen=True)
class TypeUniverse:
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", _check_names(self.names, "type universe"))

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown type {name!r}") from None


@dataclass(frozen=True)
class IdentifierSet:
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", _check_names(self.names, "identifier set"))

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown identifier {name!r}") from None


# Constraint AST.  Nodes cache their hash so that formulas with heavily shared
# subterms (the frontend produces these) hash in O(1) per node.


class Constraint:
    __slots__ = ()

    def children(self) -> tuple[Constraint, ...]:
        return ()

    def __invert__(self):
        return Not(self)

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)


@dataclass(frozen=True, eq=True)
class Is(Constraint):
    var: int
    type: int
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("is", self.var, self.type)))

    def __hash__(self):
        return self._hash


@dataclass(frozen=True, eq=True)
class Not(Constraint):
    child: Constraint
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("not", self.child)))

    def __hash__(self):
        return self._hash

    def children(self):
        return (self.child,)


@dataclass(frozen=True, eq=True)
class And(Constraint):
    left: Constraint
    right: Constraint
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("and", self.left, self.right)))

    def __hash__(self):
        return self._hash

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=True)
class Or(Constraint):
    left: Constraint
    right: Constraint
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("or", self.left, self.right)))

    def __hash__(self):
        return self._hash

    def children(self):
        return (self.left, self.right)


def postorder(e: Constraint) -> list[Constraint]:
    """Distinct nodes of `e` (by identity), children before parents.

    Iterative, so deep conjunction chains do not hit the recursion limit.
    """
    seen: set[int] = set()
    order: list[Constraint] = []
    stack: list[tuple[Constraint, bool]] = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.children()):
            if id(child) not in seen:
                stack.append((child, False))
    return order


def atoms(e: Constraint) -> list[Is]:
    """Distinct atoms of `e` in left-to-right order of first occurrence."""
    out = {}
    for node in postorder(e):
        if isinstance(node, Is):
            out.setdefault(node, None)
    return list(out)


def depth(e: Constraint) -> int:
    """Height of the tree; an atom has depth 0."""
    d: dict[int, int] = {}
    for node in postorder(e):
        kids = node.children()
        d[id(node)] = 1 + max(d[id(c)] for c in kids) if kids else 0
    return d[id(e)]


def size(e: Constraint) -> int:
    """Number of nodes when `e` is read as a tree (shared subterms counted again)."""
    s: dict[int, int] = {}
    for node in postorder(e):
        s[id(node)] = 1 + sum(s[id(c)] for c in node.children())
    return s[id(e)]


def check_constraint(e: Constraint, num_vars: int, num_types: int) -> None:
    for node in postorder(e):
        if isinstance(node, Is):
            if not (0 <= node.var < num_vars and 0 <= node.type < num_types):
                raise MalformedConstraintError(
                    f"atom {node} out of range for V={num_vars}, T={num_types}"
                )
        elif not isinstance(node, (Not, And, Or)):
            raise MalformedConstraintError(f"unknown constraint node {node!r}")


def _balanced(parts: Sequence[Constraint], node) -> Constraint:
    if not parts:
        raise ValueError("cannot combine an empty sequence of constraints")
    layer = list(parts)
    while len(layer) > 1:
        nxt = [node(layer[i], layer[i + 1]) for i in range(0, len(layer) - 1, 2)]
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]


def conjoin(parts: Sequence[Constraint]) -> Constraint:
    """Balanced conjunction (keeps tree depth logarithmic in the part count)."""
    return _balanced(parts, And)


def disjoin(parts: Sequence[Constraint]) -> Constraint:
    return _balanced(parts, Or)


@dataclass(frozen=True)
class TypeEnvironment:
    """Total assignment of a type index to every identifier index."""

    assignment: tuple[int, ...]
    num_types: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(t) for t in self.assignment))
        if not self.assignment:
            raise ValueError("environment must assign at least one identifier")
        if self.num_types < 1:
            raise ValueError("num_types must be positive")
        bad = [t for t in self.assignment if not 0 <= t < self.num_types]
        if bad:
            raise ValueError(f"type index out of range 0..{self.num_types - 1}: {bad}")

    @property
    def num_vars(self) -> int:
        return len(self.assignment)

    def __getitem__(self, v: int) -> int:
        return self.assignment[v]

    def named(self, ids: IdentifierSet, universe: TypeUniverse) -> dict[str, str]:
        return {ids.names[v]: universe.names[t] for v, t in enumerate(self.assignment)}


def satisfies(env: TypeEnvironment, e: Constraint) -> bool:
    """Classical satisfaction of `e` by `env`, by structural recursion."""
    check_constraint(e, env.num_vars, env.num_types)
    val: dict[int, bool] = {}
    for node in postorder(e):
        if isinstance(node, Is):
            val[id(node)] = env.assignment[node.var] == node.type
        elif isinstance(node, Not):
            val[id(node)] = not val[id(node.child)]
        elif isinstance(node, And):
            val[id(node)] = val[id(node.left)] and val[id(node.right)]
        else:
            val[id(node)] = val[id(node.left)] or val[id(node.right)]
    return val[id(e)]


def to_binary_matrix(env: TypeEnvironment) -> np.ndarray:
    b = np.zeros((env.num_vars, env.num_types))
    b[np.arange(env.num_vars), env.assignment] = 1.0
    return b


def enumerate_environments(
    num_vars: int, num_types: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[TypeEnvironment]:
    """Every total assignment, in lexicographic order."""
    if num_vars < 1 or num_types < 1:
        raise ValueError("num_vars and num_types must be positive")
    count = num_types**num_vars
    if count > cap:
        raise EnumerationCapError(
            f"{num_types}^{num_vars} = {count} environments exceeds cap {cap}"
        )
    for combo in itertools.product(range(num_types), repeat=num_vars):
        yield TypeEnvironment(combo, num_types)


def random_constraint(
    rng: random.Random, num_vars: int, num_types: int, max_depth: int
) -> Constraint:
    """Random formula: node kinds uniform while depth budget remains, atoms uniform."""
    kind = rng.randrange(4) if max_depth > 0 else 0
    if kind == 0:
        return Is(rng.randrange(num_vars), rng.randrange(num_types))
    if kind == 1:
        return Not(random_constraint(rng, num_vars, num_types, max_depth - 1))
    left = random_constraint(rng, num_vars, num_types, max_depth - 1)
    right = random_constraint(rng, num_vars, num_types, max_depth - 1)
    return And(left, right) if kind == 2 else Or(left, right)


def random_environment(rng: random.Random, num_vars: int, num_types: int) -> TypeEnvironment:
    return TypeEnvironment([rng.randrange(num_types) for _ in range(num_vars)], num_types)
