import pytest

from relspec.analyzer import desugar_appended_facts, dump_typed, free_variables
from relspec.errors import (
    AnalysisError, ArityError, CycleError, ResolveError, StructureViolations, TypeCheckError,
    UnknownAssert, UnknownPred,
)
from relspec.model import (
    Card, FieldRef, IntCompare, IntLit, Join, Quantified, SigRef, VarRef, structural_check,
)
from relspec.parser import parse_formula, parse_text
from relspec.printer import format_formula

from conftest import typed_of


def test_metamodel_counts(metamodel_typed):
    t = metamodel_typed
    assert len(t.sig_order) == 8
    assert len(t.field_table) == 18
    assert len(t.multiplicity_constraints) == 12
    assert len(t.appended_constraints) == 4
    assert t.fact_constraints == ()


def test_metamodel_multiplicity_breakdown(metamodel_typed):
    mults = [f.mult for f in metamodel_typed.field_table.values()]
    assert (mults.count("one"), mults.count("lone"), mults.count("some"), mults.count("set")) == (10, 1, 1, 6)


def test_corpus_hierarchy(corpus_typed):
    t = corpus_typed
    assert t.hierarchy["GCA"].parent == "Ecosystem" and t.hierarchy["GCA"].is_one
    assert t.singletons_under("Segment") == 8
    assert set(t.descendants("GoalType")) >= {"Biodiversity", "CarbonSequestration", "SoilImprovement"}
    assert t.top("ModuloII") == "Ecosystem"
    assert t.related("GCA", "Ecosystem") and not t.related("GCA", "ModuloII")
    assert t.string_literals == ("Byrsonima crassifolia", "Hyparrhenia rufa", "Juice Factory")


def test_appended_fact_desugars_to_quantified_this():
    (sig,) = parse_text("sig Region { lines: set Region } { #lines >= 3 }").sigs
    (f,) = desugar_appended_facts(sig, ["lines"])
    assert format_formula(f) == "all this: Region | #this.lines >= 3"
    assert free_variables(f) == set()


def test_appended_fact_leaves_joined_field_names_alone():
    (sig,) = parse_text("sig A { f: set A, g: set A } { f.g in A }").sigs
    (f,) = desugar_appended_facts(sig, ["f", "g"])
    assert format_formula(f) == "all this: A | this.f.g in A"


def test_appended_fact_is_resolved_against_owner():
    t = typed_of("sig Region { lines: set Region } { #lines >= 3 }")
    (f,) = t.appended_constraints
    assert f == Quantified("all", "this", "Region", IntCompare(
        ">=", Card(Join(VarRef("this"), FieldRef("Region.lines"))), IntLit(3)))


@pytest.mark.parametrize("mult,op", [("one", "="), ("lone", "<="), ("some", ">=")])
def test_implicit_multiplicity(mult, op):
    t = typed_of(f"sig A {{ f: {mult} A }}")
    (f,) = t.multiplicity_constraints
    assert format_formula(f) == f"all x: A | #x.f {op} 1"


def test_set_fields_add_no_constraint():
    assert typed_of("sig A { f: set A }").multiplicity_constraints == ()


def test_inherited_fields_resolve_through_children():
    t = typed_of("sig A { f: set A }\nsig B extends A {}\nfact { some B.f }")
    (f,) = t.fact_constraints
    assert f.left.expr == Join(SigRef("B"), FieldRef("A.f"))
    assert f.left.expr.cols == (frozenset({"A"}),)


def test_same_field_name_on_unrelated_sigs_uses_join_hint():
    t = typed_of("sig A { n: set A }\nsig B { n: set B }\nfact { some A.n and some B.n }")
    a, b = t.fact_constraints[0].parts
    assert a.left.expr.right == FieldRef("A.n") and b.left.expr.right == FieldRef("B.n")


def test_bare_ambiguous_field_is_rejected():
    with pytest.raises(ResolveError, match="ambiguous"):
        typed_of("sig A { n: set A }\nsig B { n: set B }\nfact { some n }")


def test_int_field_compares_with_literal():
    t = typed_of("sig P { w: one Int }\nfact { all p: P | p.w > 0 }")
    assert t.fact_constraints[0].body.op == ">"


@pytest.mark.parametrize("src,exc,where", [
    ("sig A extends B {}", ResolveError, "1:1"),
    ("sig A extends B {}\nsig B extends A {}", CycleError, "1:1"),
    ("one sig A {}\nsig B extends A {}", AnalysisError, "2:1"),
    ("sig A { f: one Z }", ResolveError, "1:9"),
    ("sig A { f: one A }\nsig B extends A { f: one A }", ResolveError, "2:19"),
    ("sig A {}\npred p[x: A] { q[x] }\npred q[x: A] { p[x] }", CycleError, "2:1"),
    ("sig A {}\ncheck nope", UnknownAssert, "2:1"),
    ("sig A {}\nrun nope", UnknownPred, "2:1"),
    ("sig A {}\nfact { some Z }", ResolveError, "2:13"),
    ("sig A { f: set A }\nsig B { g: set B }\nfact { some A.g }", TypeCheckError, "3:13"),
    ("sig A { f: set A }\nfact { A = f }", ArityError, "2:8"),
    ('sig A { n: one String }\nfact { some A + "x" }', TypeCheckError, "2:13"),
    ("sig A {}\nsig B {}\nfact { A = B }", TypeCheckError, "3:8"),
    ("sig A {}\nfact { #A = A }", TypeCheckError, "2:9"),
    ("sig A {}\npred p[x: A] { some x }\nfact { p[A, A] }", ArityError, "3:8"),
    ("sig A {}\nfact { q[A] }", UnknownPred, "2:8"),
    ("sig A {}\nsig A {}", StructureViolations, "2:1"),
    ("sig A {}\nfact { all x: A | some y }", ResolveError, "2:24"),
])
def test_analysis_errors(src, exc, where):
    with pytest.raises(exc) as info:
        typed_of(src)
    assert info.value.diagnostic().startswith(f"{where}: error:")


@pytest.mark.parametrize("src,fragment", [
    ("sig A {}\nsig A {}", "duplicate signature A"),
    ("abstract one sig A {}", "both abstract and one"),
    ("sig A { f: set A, f: one A }", "duplicate field f"),
    ("sig A {}\nfact {}", "empty body"),
    ("sig A {}\npred p[x: A, x: A] { some x }", "duplicate parameter x"),
    ("assert a { some A }\nassert a { some A }", "duplicate assertion a"),
    ("pred p[] { }\npred p[] { }", "duplicate predicate p"),
    ("fact f { some A }\nfact f { some A }", "duplicate fact f"),
])
def test_structural_check(src, fragment):
    violations = structural_check(parse_text(src))
    assert any(fragment in v.message for v in violations)


def test_structural_check_accepts_corpus(corpus_typed):
    assert structural_check(corpus_typed.spec) == []


def test_pred_calls_resolve_to_declarations():
    t = typed_of("sig A { f: set A }\npred p[x: A] { some x.f }\nfact { all a: A | p[a] }")
    call = t.fact_constraints[0].body
    assert call.decl is t.preds["p"]


def test_dump_typed_lists_every_constraint(metamodel_typed):
    text = dump_typed(metamodel_typed)
    assert text.count("[multiplicity]") == 12
    assert text.count("[appended]") == 4
    assert "all this: Region | #this.lines >= 3" in text
    assert text.splitlines()[-1].startswith("summary: 8 signatures, 18 fields")


def test_free_variables_of_open_formula():
    assert free_variables(parse_formula("x.f in y and all z: A | z in x", ["x", "y"])) == {"x", "y"}
