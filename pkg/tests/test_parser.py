import pytest

from relspec import CORPUS_DIR
from relspec.errors import ParseError
from relspec.model import (
    And, Card, Command, Equal, Implies, In, IntCompare, IntLit, Join, Name, Not, Or, PredCall,
    Quantified, StringLit, Union, VarRef,
)
from relspec.parser import parse_formula, parse_text

from conftest import CORPUS_FILES


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_corpus_files_parse(name):
    spec = parse_text((CORPUS_DIR / name).read_text(), name)
    assert not spec.is_empty()


def test_metamodel_shape():
    spec = parse_text((CORPUS_DIR / "metamodel.spec").read_text())
    assert [s.name for s in spec.sigs] == [
        "Ecosystem", "Region", "Segment", "Species", "Property", "RestorationGoal",
        "PropertyType", "GoalType"]
    assert sum(len(s.fields) for s in spec.sigs) == 18
    assert sum(len(s.appended_facts) for s in spec.sigs) == 4
    species = spec.sigs[3]
    assert species.is_abstract and [f.name for f in species.fields] == ["inhabits", "scientificName"]


def test_sig_lists_expand_to_one_decl_each():
    spec = parse_text("sig E {}\none sig A, B extends E {}")
    a, b = spec.sigs[1:]
    assert (a.name, a.is_one, a.parent) == ("A", True, "E")
    assert (b.name, b.is_one, b.parent) == ("B", True, "E")
    assert b.loc.col == 12


def test_appended_block_binds_this():
    (sig,) = parse_text("sig R { lines: set R } { #this.lines >= 3 #lines >= 1 }").sigs
    first, second = sig.appended_facts
    assert first == IntCompare(">=", Card(Join(VarRef("this"), Name("lines"))), IntLit(3))
    assert second == IntCompare(">=", Card(Name("lines")), IntLit(1))


def test_pred_params_are_bound():
    (pred,) = parse_text("pred p[x: A, y: B] { x.f = y }").preds
    assert pred.params == (("x", "A"), ("y", "B"))
    assert pred.body == (Equal(Join(VarRef("x"), Name("f")), VarRef("y")),)


def test_commands():
    spec = parse_text("check a for 4\nrun p\nrun { some A } for 2")
    assert spec.commands == (
        Command("check", "a", None, 4),
        Command("run", "p"),
        Command("run", None, (IntCompare(">=", Card(Name("A")), IntLit(1)),), 2),
    )


@pytest.mark.parametrize("src,expected", [
    ("a = b", Equal(Name("a"), Name("b"))),
    ("a != b", Not(Equal(Name("a"), Name("b")))),
    ("#a != 2", IntCompare("!=", Card(Name("a")), IntLit(2))),
    ("a.w < 3", IntCompare("<", Join(Name("a"), Name("w")), IntLit(3))),
    ("a not in b", Not(In(Name("a"), Name("b")))),
    ("some a", IntCompare(">=", Card(Name("a")), IntLit(1))),
    ("one a.f", IntCompare("=", Card(Join(Name("a"), Name("f"))), IntLit(1))),
    ("lone a", IntCompare("<=", Card(Name("a")), IntLit(1))),
    ('x.n = "Hyparrhenia rufa"', Equal(Join(Name("x"), Name("n")), StringLit("Hyparrhenia rufa"))),
    ("#a + b >= 1", IntCompare(">=", Union(Card(Name("a")), Name("b")), IntLit(1))),
    ("p[a, b.c]", PredCall("p", (Name("a"), Join(Name("b"), Name("c"))))),
])
def test_atomic_formulas(src, expected):
    assert parse_formula(src) == expected


def test_join_is_left_associative_and_binds_tighter_than_union():
    assert parse_formula("a.b.c + d in e") == In(
        Union(Join(Join(Name("a"), Name("b")), Name("c")), Name("d")), Name("e"))


def test_connective_precedence():
    a, b, c = (In(Name(x), Name("S")) for x in "abc")
    assert parse_formula("a in S or b in S and c in S") == Or(a, And((b, c)))
    assert parse_formula("a in S => b in S => c in S") == Implies(a, Implies(b, c))
    assert parse_formula("not a in S and b in S") == And((Not(a), b))


def test_parenthesised_expression_is_not_mistaken_for_formula():
    assert parse_formula("(a + b) in c") == In(Union(Name("a"), Name("b")), Name("c"))
    assert parse_formula("(a in c)") == In(Name("a"), Name("c"))


def test_quantifier_with_several_variables_nests():
    f = parse_formula("all x, y: S | x = y")
    assert f == Quantified("all", "x", "S", Quantified("all", "y", "S", Equal(VarRef("x"), VarRef("y"))))


def test_quantifier_body_extends_right():
    f = parse_formula("some x: S | x in A and x in B")
    assert isinstance(f, Quantified) and isinstance(f.body, And)


def test_trailing_comma_in_field_list():
    (sig,) = parse_text("sig A { f: one A, }").sigs
    assert [f.name for f in sig.fields] == ["f"]


@pytest.mark.parametrize("src,line,col", [
    ("sig {", 1, 5),
    ("sig A { f: A }", 1, 12),
    ("sig A {}\nfact { all this: A | some this }", 2, 12),
    ("check a for 0", 1, 13),
    ("fact { a in }", 1, 13),
    ("fact { a in b", 1, 14),
    ("pred p[x: A { }", 1, 13),
    ("sig A {} bogus", 1, 10),
])
def test_parse_errors(src, line, col):
    with pytest.raises(ParseError) as info:
        parse_text(src, "t.spec")
    assert (info.value.line, info.value.col) == (line, col)
    assert str(info.value.loc) == f"t.spec:{line}:{col}"


def test_parse_error_lists_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse_text("sig A { f: many A }")
    assert "'one'" in info.value.expected


def test_empty_source_is_an_empty_spec():
    assert parse_text("// only a comment\n").is_empty()
