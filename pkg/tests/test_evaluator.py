import random

import pytest

from relspec.errors import EvalError, StructureError
from relspec.evaluator import (
    RelValue, check_structure, eval_expr, eval_formula, join, verify_instance, witness,
)
from relspec.model import Instance, Universe

from conftest import typed_of
from randspec import LAW_SCHEMA_TEXT, analyzed_formula, random_law_formula, random_law_instance

SCHEMA = """
sig Eco { sub: set Eco, goal: lone Goal }
one sig Top extends Eco {}
sig Goal { on: one Eco, w: one Int, label: one String }
pred targets[g: Goal, e: Eco] { g.on = e }
"""


@pytest.fixture(scope="module")
def typed():
    return typed_of(SCHEMA + 'fact { some g: Goal | g.label = "x" }')


def make(typed, sigs, fields, ints=range(-8, 8), strings=('"x"',)):
    atoms = {}
    for s in typed.sig_order:
        members = dict.fromkeys([s, *typed.descendants(s)])
        atoms[s] = tuple(a for d in members for a in sigs.get(d, ()))
    rels = {q: frozenset(fields.get(q, ())) for q in typed.field_table}
    return Instance(Universe(atoms, tuple(map(str, ints)), tuple(strings)), rels)


@pytest.fixture
def inst(typed):
    return make(typed, {"Eco": ["Eco$0"], "Top": ["Top"], "Goal": ["Goal$0", "Goal$1"]}, {
        "Eco.sub": [("Top", "Eco$0")],
        "Eco.goal": [("Top", "Goal$0")],
        "Goal.on": [("Goal$0", "Top"), ("Goal$1", "Top")],
        "Goal.w": [("Goal$0", "3"), ("Goal$1", "-2")],
        "Goal.label": [("Goal$0", '"x"'), ("Goal$1", '"x"')],
    })


def analyzed(typed, text):
    from relspec.parser import parse_text
    from relspec.analyzer import analyze
    spec = parse_text(SCHEMA + f"assert t {{ {text} }}")
    return analyze(spec).asserts["t"].body[0]


def test_join_drops_the_matched_column():
    left = frozenset({("a", "b"), ("a", "c")})
    right = frozenset({("b", "x"), ("c", "y"), ("d", "z")})
    assert join(left, right) == {("a", "x"), ("a", "y")}


def test_relvalue_checks_arity():
    with pytest.raises(ValueError):
        RelValue(2, frozenset({("a",)}))


def test_sig_atoms_include_descendants(typed, inst):
    e = analyzed(typed, "some Eco").left.expr
    assert eval_expr(inst, {}, e) == RelValue(1, frozenset({("Eco$0",), ("Top",)}))


@pytest.mark.parametrize("text,expected", [
    ("Top.sub in Eco", True),
    ("Top.goal.on = Top", True),
    ("#Goal.on = 1", True),
    ("#Goal = 2", True),
    ("Eco.goal in Goal", True),
    ("Top.sub.sub = Top.goal.on", False),
    ("all g: Goal | g.on = Top", True),
    ("some g: Goal | g.w > 0", True),
    ("all g: Goal | g.w > 0", False),
    ("Goal.w = 1", False),  # relational: {3, -2} is not {1}
    ("Goal.w < 2 and Goal.w > 0", True),  # integer context sums 3 + -2
    ("all g: Goal | targets[g, Top]", True),
    ("some e: Eco | targets[Top.goal, e] and e != Top", False),
    ('all g: Goal | g.label = "x"', True),
    ("not (some Top.goal) or #Goal >= 3", False),
    ("some Top.goal => some Top.sub", True),
    ("lone Top.goal and one Top and some Goal", True),
    ("Top + Top.sub = Eco", True),
])
def test_eval_formula(typed, inst, text, expected):
    assert eval_formula(inst, {}, analyzed(typed, text)) is expected


def test_pred_call_needs_a_single_atom(typed):
    empty = make(typed, {"Top": ["Top"], "Goal": []}, {})
    f = analyzed(typed, "targets[Goal, Top]")
    with pytest.raises(EvalError):
        eval_formula(empty, {}, f)


def test_witness_picks_first_falsifying_atom(typed, inst):
    f = analyzed(typed, "all e: Eco | some e.goal")
    assert witness(inst, f) == {"e": "Eco$0"}
    nested = analyzed(typed, "all g: Goal | all e: Eco | g.on = e")
    assert witness(inst, nested) == {"g": "Goal$0", "e": "Eco$0"}
    assert witness(inst, analyzed(typed, "all g: Goal | some g.on")) == {}


def test_verify_instance_reports_violated_facts(typed, inst):
    assert verify_instance(typed, inst).ok
    broken = make(typed, {"Top": ["Top"], "Goal": ["Goal$0"]}, {
        "Goal.on": [("Goal$0", "Top")], "Goal.w": [("Goal$0", "1")],
    })
    verdict = verify_instance(typed, broken)
    assert not verdict.ok
    failures = {str(w) for _, w in verdict.violations}
    assert "{'g': 'Goal$0'}" in failures or "{'x': 'Goal$0'}" in failures


@pytest.mark.parametrize("mutate,fragment", [
    (lambda s, r: s.update(Top=["Top", "Top$1"]), "one sig Top has 2 atoms"),
    (lambda s, r: r.update({"Goal.on": [("Goal$0", "Nowhere")]}), "leaves Goal x Eco"),
    (lambda s, r: r.update({"Bogus.f": []}), "unknown relations"),
])
def test_check_structure(typed, mutate, fragment):
    sigs = {"Top": ["Top"], "Goal": ["Goal$0"]}
    rels = {"Goal.on": [("Goal$0", "Top")], "Goal.w": [("Goal$0", "1")], "Goal.label": [("Goal$0", '"x"')]}
    mutate(sigs, rels)
    inst = make(typed, sigs, {})
    inst = Instance(inst.universe, {**{q: frozenset() for q in typed.field_table},
                                    **{q: frozenset(v) for q, v in rels.items()}})
    problems = check_structure(typed, inst)
    assert any(fragment in p for p in problems), problems
    with pytest.raises(StructureError):
        verify_instance(typed, inst)


def test_abstract_sig_with_own_atoms_is_structural_error():
    t = typed_of("abstract sig A {}\nsig B extends A {}")
    inst = Instance(Universe({"A": ("A$0", "B$0"), "B": ("B$0",)}), {})
    assert any("abstract A" in p for p in check_structure(t, inst))


# -- algebraic laws on random instances -------------------------------------------------


@pytest.fixture(scope="module")
def law_typed():
    return typed_of(LAW_SCHEMA_TEXT)


@pytest.mark.parametrize("seed", range(5))
def test_quantifier_duality(law_typed, seed):
    rng = random.Random(seed)
    for _ in range(100):
        inst = random_law_instance(rng, law_typed)
        sig = rng.choice("ABC")
        text, _ = random_law_formula(rng, law_typed, env=(("q", sig),))
        univ = analyzed_formula(law_typed, f"all q: {sig} | {text}")
        dual = analyzed_formula(law_typed, f"not (some q: {sig} | not ({text}))")
        assert eval_formula(inst, {}, univ) == eval_formula(inst, {}, dual), text
