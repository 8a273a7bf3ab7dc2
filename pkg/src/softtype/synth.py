"""Seeded synthetic fixtures: a naming-convention corpus and a toy-program corpus.

Names follow conventions a human would recognise: words such as ``cnt``,
``idx`` or ``num`` mark numbers, ``name``, ``msg`` or ``str`` mark strings,
and ``is``/``has``-style prefixes mark booleans.  A small share of generic
names (``value``, ``data``, ...) carries no signal and gets a random label.

Toy programs mix slots whose types follow from how they are used (operands of
``*``, ``++``, ``&&``, literal returns) with slots that usage leaves open
(operands of ``+``, comparisons, unused parameters), and mix conventional names
with generic and misleading ones, so that neither source of evidence suffices
on its own.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .logic import TypeUniverse

DEFAULT_TYPES = ("number", "string", "boolean", "any")

NUMBER_WORDS = (
    "count", "cnt", "idx", "index", "num", "total", "size", "len", "length", "width",
    "height", "offset", "sum", "max", "min", "pos", "start", "end", "limit", "age",
)
STRING_WORDS = (
    "name", "msg", "message", "str", "text", "label", "title", "path", "url", "key",
    "prefix", "suffix", "line", "word", "fmt", "sep", "desc", "email",
)
BOOL_PREFIXES = ("is", "has", "can", "should")
BOOL_WORDS = ("flag", "done", "ok", "enabled", "valid", "found", "visible", "ready")
BOOL_TAILS = (
    "valid", "empty", "ready", "items", "name", "count", "error", "done", "open", "admin",
    "access", "retry", "changed", "loaded", "value", "children", "visible", "enabled",
    "match", "key", "data", "prefix", "more", "next",
)
MODIFIERS = (
    "user", "item", "file", "page", "error", "first", "last", "next", "prev", "tmp", "new",
    "old", "src", "dst", "base", "default", "current", "node", "list", "total", "cell",
    "word", "input", "output", "local", "global", "my", "min", "max",
)
VERBS = ("get", "compute", "calc", "add", "make", "build", "format", "to", "find", "read", "parse", "load", "next")
GENERIC = (
    "value", "val", "data", "result", "res", "tmp", "item", "x", "y", "a", "b", "arg",
    "obj", "v", "elem", "thing", "acc", "other", "input", "output", "z", "p", "q", "w",
)


def _camel(words):
    head, *rest = words
    return head + "".join(w[:1].upper() + w[1:] for w in rest)


def _join(rng, words):
    return "_".join(words) if rng.random() < 0.2 else _camel(words)


def _typed_name(rng: random.Random, kind: str) -> str:
    if kind == "boolean":
        form = rng.random()
        if form < 0.75:
            return _join(rng, [rng.choice(BOOL_PREFIXES), rng.choice(BOOL_TAILS)])
        if form < 0.9:
            return rng.choice(BOOL_WORDS)
        return _join(rng, [rng.choice(MODIFIERS), rng.choice(BOOL_WORDS)])
    words = NUMBER_WORDS if kind == "number" else STRING_WORDS
    head = rng.choice(words)
    form = rng.random()
    if form < 0.3:
        return head
    if form < 0.65:
        return _join(rng, [rng.choice(MODIFIERS), head])
    if form < 0.85:
        return _join(rng, [rng.choice(VERBS), head])
    if kind == "number" and form < 0.95:
        return _join(rng, ["num", rng.choice(("items", "rows", "users", "files", "nodes", "pages", "chars", "lines"))])
    return _join(rng, [rng.choice(VERBS), rng.choice(MODIFIERS), head])


def convention_name(rng: random.Random, type_name: str) -> str:
    """A name that follows the convention for `type_name`."""
    return _typed_name(rng, type_name)


def generic_name(rng: random.Random) -> str:
    return rng.choice(GENERIC)


def name_corpus(n: int = 1000, seed: int = 0, generic_share: float = 0.05):
    """`n` (name, type-name) pairs over number / string / boolean."""
    rng = random.Random(seed)
    kinds = ("number", "string", "boolean")
    out = []
    for _ in range(n):
        kind = rng.choice(kinds)
        if rng.random() < generic_share:
            out.append((generic_name(rng), kind))
        else:
            out.append((_typed_name(rng, kind), kind))
    return out


def labelled_name_corpus(n: int = 1000, seed: int = 0, universe: TypeUniverse | None = None):
    from .natural.train import LabelledCorpus

    universe = universe or TypeUniverse(DEFAULT_TYPES)
    pairs = tuple((name, universe.index(t)) for name, t in name_corpus(n, seed))
    return LabelledCorpus(pairs, universe)


# -- toy-program corpus ---------------------------------------------------------

CONCRETE = ("number", "string", "boolean")
GENERIC_FUNCTIONS = ("helper", "process", "run", "handle", "apply", "update", "step", "check", "go", "doIt")
LITERALS = {"number": ("0", "1", "2", "10", "42"), "string": ('"a"', '"-"', '"ok"', '""'), "boolean": ("true", "false")}


@dataclass
class _Fn:
    name: str
    params: list  # (name, type)
    ret: str
    body: list = field(default_factory=list)  # source lines
    lets: list = field(default_factory=list)  # (name, type) declared in order

    def render(self) -> str:
        params = ", ".join(f"{n}: {t}" for n, t in self.params)
        lines = [f"function {self.name}({params}): {self.ret} {{"]
        lines += ["    " + ln for ln in self.body]
        lines.append("}")
        return "\n".join(lines)


class _Names:
    """Draws names for slots, with a mix of conventional, generic and misleading ones."""

    def __init__(self, rng: random.Random, p_generic: float, p_misleading: float):
        self.rng = rng
        self.p_generic = p_generic
        self.p_misleading = p_misleading

    def draw(self, type_name: str, taken: set) -> str:
        rng = self.rng
        for _ in range(50):
            u = rng.random()
            if u < self.p_generic:
                name = generic_name(rng)
            elif u < self.p_generic + self.p_misleading:
                name = _typed_name(rng, rng.choice([t for t in CONCRETE if t != type_name]))
            else:
                name = _typed_name(rng, type_name)
            if name not in taken and name not in _RESERVED:
                taken.add(name)
                return name
        name = f"{generic_name(rng)}{len(taken)}"
        taken.add(name)
        return name

    def function(self, type_name: str, taken: set) -> str:
        rng = self.rng
        for _ in range(50):
            if rng.random() < 0.3:
                name = rng.choice(GENERIC_FUNCTIONS)
            else:
                name = _typed_name(rng, type_name)
            if name not in taken and name not in _RESERVED:
                taken.add(name)
                return name
        name = f"fn{len(taken)}"
        taken.add(name)
        return name


_RESERVED = {"function", "let", "return", "if", "else", "true", "false"}


def _template(rng: random.Random, names: _Names, fname_taken: set, callees: list) -> _Fn:
    kind = rng.choice(("arith", "plus", "concat", "compare", "logic", "literal", "counter", "branch", "call"))
    if kind == "call" and not callees:
        kind = "plus"
    local: set = set()

    def params(*types):
        return [(names.draw(t, local), t) for t in types]

    if kind == "arith":
        (a, _), (b, _) = ps = params("number", "number")
        op = rng.choice(("-", "*", "/", "%"))
        fn = _Fn(names.function("number", fname_taken), ps, "number")
        if rng.random() < 0.5:
            t = names.draw("number", local)
            fn.lets.append((t, "number"))
            fn.body += [f"let {t}: number = {a} {op} {b};", f"return {t};"]
        else:
            fn.body.append(f"return {a} {op} {b};")
        return fn
    if kind == "plus":
        ty = rng.choice(("number", "string"))
        (a, _), (b, _) = ps = params(ty, ty)
        fn = _Fn(names.function(ty, fname_taken), ps, ty)
        if rng.random() < 0.5:
            t = names.draw(ty, local)
            fn.lets.append((t, ty))
            fn.body += [f"let {t}: {ty} = {a} + {b};", f"return {t};"]
        else:
            fn.body.append(f"return {a} + {b};")
        return fn
    if kind == "concat":
        (a, _), (b, _) = ps = params("string", "string")
        fn = _Fn(names.function("string", fname_taken), ps, "string")
        fn.body.append(f"return {a} ++ {rng.choice(LITERALS['string'])} ++ {b};")
        return fn
    if kind == "compare":
        ty = rng.choice(CONCRETE)
        (a, _), (b, _) = ps = params(ty, ty)
        op = rng.choice(("==", "!=")) if ty != "number" else rng.choice(("<", "<=", ">", "==", "!="))
        fn = _Fn(names.function("boolean", fname_taken), ps, "boolean")
        fn.body.append(f"return {a} {op} {b};")
        return fn
    if kind == "logic":
        (a, _), (b, _) = ps = params("boolean", "boolean")
        fn = _Fn(names.function("boolean", fname_taken), ps, "boolean")
        fn.body.append(f"return {a} {rng.choice(('&&', '||'))} !{b};")
        return fn
    if kind == "literal":
        ret = rng.choice(CONCRETE)
        ps = params(*(rng.choice(CONCRETE) for _ in range(rng.randint(1, 2))))
        fn = _Fn(names.function(ret, fname_taken), ps, ret)
        fn.body.append(f"return {rng.choice(LITERALS[ret])};")
        return fn
    if kind == "counter":
        (a, _), = ps = params("number")
        fn = _Fn(names.function("number", fname_taken), ps, "number")
        n = names.draw("number", local)
        fn.lets.append((n, "number"))
        fn.body += [f"let {n}: number = {rng.choice(LITERALS['number'])};", f"{n} = {n} + {a};", f"return {n};"]
        return fn
    if kind == "branch":
        ty = rng.choice(("number", "string"))
        (c, _), (a, _), (b, _) = ps = params("boolean", ty, ty)
        fn = _Fn(names.function(ty, fname_taken), ps, ty)
        fn.body += [f"if ({c}) {{", f"    return {a} + {b};", "} else {", f"    return {b};", "}"]
        return fn
    # call: forward an argument of the callee's first parameter type
    callee = rng.choice(callees)
    arg_types = [t for _, t in callee.params]
    ps = params(*arg_types)
    fn = _Fn(names.function(callee.ret, fname_taken), ps, callee.ret)
    args = ", ".join(n for n, _ in ps)
    fn.body.append(f"return {callee.name}({args});")
    return fn


def toy_program(rng: random.Random, p_generic: float = 0.3, p_misleading: float = 0.1) -> str:
    """Fully annotated source of one random toy program (two to four functions)."""
    names = _Names(rng, p_generic, p_misleading)
    taken: set = set()
    fns: list = []
    for _ in range(rng.randint(2, 4)):
        fns.append(_template(rng, names, taken, fns))
    return "\n\n".join(fn.render() for fn in fns) + "\n"


def program_corpus(n: int = 50, seed: int = 0) -> list[tuple[str, str]]:
    """`n` (file name, annotated source) pairs."""
    rng = random.Random(seed)
    return [(f"prog_{i:03d}.tl", toy_program(rng)) for i in range(n)]


def write_fixtures(out_dir, seed: int = 0, programs: int = 50, names: int = 1000) -> dict:
    """Write ``programs/*.tl`` gold files and a ``names.tsv`` naming corpus under `out_dir`."""
    out = Path(out_dir)
    (out / "programs").mkdir(parents=True, exist_ok=True)
    for fname, src in program_corpus(programs, seed):
        (out / "programs" / fname).write_text(src, encoding="utf-8")
    pairs = name_corpus(names, seed)
    (out / "names.tsv").write_text("".join(f"{n}\t{t}\n" for n, t in pairs), encoding="utf-8")
    return {"programs": programs, "names": names, "seed": seed}
