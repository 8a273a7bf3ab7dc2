import random

import pytest

from softtype.errors import ConstraintGenerationError, ParseError
from softtype.frontend import (
    DEFAULT_UNIVERSE,
    FUN,
    PAR,
    VAR,
    ConstraintBundle,
    TypeCheckError,
    annotate_source,
    check_program,
    format_program,
    generate_constraints,
    gold_annotations,
    parse_program,
    strip_annotations,
    strip_source,
)
from softtype.logic import And, Is, Or, TypeEnvironment, atoms, enumerate_environments, satisfies
from softtype.synth import program_corpus, toy_program

GOLD_ADD = "function addNum(start: number, end: number): number {\n    return start + end;\n}\n"
PLAIN_ADD = "function addNum(start, end) {\n    return start + end;\n}\n"
U = DEFAULT_UNIVERSE
NUM, STR, BOOL = (U.index(t) for t in ("number", "string", "boolean"))


def equivalent(e1, e2, num_vars, num_types=len(U)):
    return all(
        satisfies(env, e1) == satisfies(env, e2) for env in enumerate_environments(num_vars, num_types)
    )


def gold_env(bundle, typing):
    return TypeEnvironment(tuple(bundle.universe.index(typing[n]) for n in bundle.ids.names), len(bundle.universe))


# -- parsing ------------------------------------------------------------------


def test_add_example_parses():
    p = parse_program(PLAIN_ADD)
    assert len(p.functions) == 1
    f = p.functions[0]
    assert f.name == "addNum" and [x.name for x in f.params] == ["start", "end"]
    assert [(s.name, s.kind) for s in p.slots()] == [("addNum.start", PAR), ("addNum.end", PAR), ("addNum", FUN)]


def test_empty_file_is_an_empty_program():
    assert parse_program("").functions == ()
    assert parse_program("  // only a comment\n").functions == ()


@pytest.mark.parametrize(
    "source,line,col",
    [
        ("function f() {\n    return 1;\n", 3, 1),
        ("function f() {\n    return 1;\n}}", 3, 2),
        ("function f(x { return x; }", 1, 14),
        ("function f() { return 1 +; }", 1, 26),
        ('function f() { return "abc; }', 1, 23),
        ("function f() { return 1 # 2; }", 1, 25),
        ("function f() { return a < b < c; }", 1, 29),
    ],
)
def test_syntax_errors_have_locations(source, line, col):
    with pytest.raises(ParseError) as info:
        parse_program(source)
    assert (info.value.line, info.value.column) == (line, col)


@pytest.mark.parametrize(
    "source,match",
    [
        ("function f() { return y; }", "undeclared identifier 'y'"),
        ("function f(x) { let x = 1; return x; }", "already declared"),
        ("function f(x, x) { return x; }", "duplicate parameter"),
        ("function f() { y = 1; return 1; }", "undeclared variable"),
        ("function f() { return g(1); }", "undeclared function"),
        ("function f() { return 1; }\nfunction f() { return 2; }", "defined twice"),
        ("function f() { let a = a; return a; }", "undeclared identifier 'a'"),
    ],
)
def test_scope_errors(source, match):
    with pytest.raises(ParseError, match=match):
        parse_program(source)


def test_one_scope_per_function_forbids_redeclaring_in_branches():
    src = "function f(c) { if (c) { let a = 1; } else { let a = 2; } return 1; }"
    with pytest.raises(ParseError, match="already declared"):
        parse_program(src)


def test_calls_may_refer_forward():
    p = parse_program("function f(x) { return g(x); }\nfunction g(y) { return y * 2; }")
    assert [f.name for f in p.functions] == ["f", "g"]


# -- stripping and annotating ---------------------------------------------------


def test_strip_removes_every_annotation_and_keeps_gold_apart():
    gold = parse_program(GOLD_ADD)
    plain = strip_annotations(gold)
    assert all(s.annotation is None for s in plain.slots())
    assert format_program(plain) == format_program(parse_program(PLAIN_ADD))
    assert gold_annotations(gold) == {"addNum.start": "number", "addNum.end": "number", "addNum": "number"}
    assert gold_annotations(plain) == {}


def test_strip_is_idempotent_and_identity_on_plain_programs():
    p = parse_program(PLAIN_ADD)
    assert strip_annotations(p) == p
    gold = parse_program(program_corpus(1, 3)[0][1])
    once = strip_annotations(gold)
    assert strip_annotations(once) == once


def test_textual_strip_and_annotate_preserve_formatting():
    src = "// header\nfunction  addNum( start :number,end: number ) :number{\n  return start+end; // sum\n}\n"
    plain = strip_source(src)
    assert plain == "// header\nfunction  addNum( start ,end ) {\n  return start+end; // sum\n}\n"
    typing = gold_annotations(parse_program(src))
    again = annotate_source(plain, typing)
    assert gold_annotations(parse_program(again)) == typing
    assert strip_source(again) == plain


def test_annotate_overwrites_existing_annotations():
    out = annotate_source(GOLD_ADD, {"addNum": "string"})
    assert gold_annotations(parse_program(out))["addNum"] == "string"
    assert out.count(":") == 3


@pytest.mark.parametrize("seed", range(10))
def test_corpus_programs_round_trip_through_text(seed):
    gold_src = toy_program(random.Random(seed))
    gold = parse_program(gold_src)
    plain_src = strip_source(gold_src)
    assert format_program(parse_program(plain_src)) == format_program(strip_annotations(gold))
    assert annotate_source(plain_src, gold_annotations(gold)) == gold_src
    assert format_program(parse_program(format_program(gold))) == format_program(gold)


# -- reference checker -----------------------------------------------------------


def test_checker_accepts_gold_and_rejects_wrong_annotations():
    assert check_program(parse_program(GOLD_ADD))["addNum"] == "number"
    with pytest.raises(TypeCheckError):
        check_program(parse_program(GOLD_ADD.replace("end: number", "end: string")))
    with pytest.raises(TypeCheckError, match="not annotated"):
        check_program(parse_program(PLAIN_ADD))
    with pytest.raises(TypeCheckError, match="abstain"):
        check_program(parse_program("function f(x: any): number { return x; }"))
    check_program(parse_program("function f(x: any): number { return 1; }"))


# -- constraint generation --------------------------------------------------------


def test_add_example_constraint():
    b = generate_constraints(parse_program(PLAIN_ADD))
    start, end, add = 0, 1, 2
    expected = Or(
        And(Is(start, NUM), And(Is(end, NUM), Is(add, NUM))),
        And(Is(start, STR), And(Is(end, STR), Is(add, STR))),
    )
    assert b.kinds == (PAR, PAR, FUN)
    assert b.short_names == ("start", "end", "addNum")
    assert equivalent(b.constraint, expected, 3)


def test_numeric_operator_pins_both_slots():
    b = generate_constraints(parse_program("function f(x){ return x * 2; }"))
    assert b.ids.names == ("f.x", "f")
    assert equivalent(b.constraint, And(Is(0, NUM), Is(1, NUM)), 2)
    gold = gold_env(b, {"f.x": "number", "f": "number"})
    assert satisfies(gold, b.constraint)


def test_literal_return():
    b = generate_constraints(parse_program('function g(){ return "a"; }'))
    assert equivalent(b.constraint, Is(0, STR), 1)


def test_unused_slots_get_no_atoms():
    b = generate_constraints(parse_program("function f(a, b) { return a * 2; }"))
    assert b.constrained_slots() == {0, 2}


def test_abstain_type_never_appears_in_atoms():
    for _, src in program_corpus(20, 5):
        b = generate_constraints(parse_program(src))
        assert all(U.names[a.type] != "any" for a in atoms(b.constraint))


def test_statements_emit_constraints():
    src = (
        "function f(c, n, s) {\n"
        "    let k = n;\n"
        "    if (c) { k = k - 1; }\n"
        "    s == s;\n"
        "    return k;\n"
        "}\n"
        "function g(m) { return f(true, m, \"x\"); }\n"
    )
    b = generate_constraints(parse_program(src))
    assert b.kinds == (PAR, PAR, PAR, FUN, VAR, PAR, FUN)
    typing = {"f.c": "boolean", "f.n": "number", "f.s": "string", "f": "number", "f.k": "number", "g.m": "number", "g": "number"}
    assert satisfies(gold_env(b, typing), b.constraint)
    for slot, wrong in (("f.c", "number"), ("f.n", "string"), ("g.m", "boolean"), ("g", "string")):
        assert not satisfies(gold_env(b, {**typing, slot: wrong}), b.constraint)


def test_impossible_usage_is_an_error():
    with pytest.raises(ConstraintGenerationError, match="never be well typed"):
        generate_constraints(parse_program('function f() { return "a" * 2; }'))
    with pytest.raises(ConstraintGenerationError, match="expects 1 arguments"):
        generate_constraints(parse_program("function f(x) { return x; }\nfunction g() { return f(1, 2); }"))


def test_generation_ignores_annotations_and_is_deterministic():
    a = generate_constraints(parse_program(GOLD_ADD))
    b = generate_constraints(parse_program(PLAIN_ADD))
    assert a.constraint == b.constraint and a.ids == b.ids
    src = program_corpus(1, 9)[0][1]
    assert generate_constraints(parse_program(src)).to_dsl() == generate_constraints(parse_program(src)).to_dsl()


def test_emissions_are_sound_for_every_gold_corpus_program():
    for name, src in program_corpus(50, 0):
        gold = parse_program(src)
        typing = check_program(gold)
        b = generate_constraints(strip_annotations(gold))
        assert satisfies(gold_env(b, typing), b.constraint), name


def test_bundle_round_trips_through_dsl_and_sidecar(tmp_path):
    b = generate_constraints(parse_program(program_corpus(1, 2)[0][1]))
    b.save(tmp_path / "b.constraints")
    back = ConstraintBundle.load(tmp_path / "b.constraints")
    assert back.ids == b.ids and back.kinds == b.kinds and back.short_names == b.short_names
    assert back.universe == b.universe
    assert back.emissions == b.emissions
    assert back.to_dsl() == b.to_dsl()
