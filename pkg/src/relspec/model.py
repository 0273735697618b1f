"""Abstract syntax, search-space and result types.

Everything here is an immutable value.  Source locations and analysis
annotations (column types) are excluded from equality so that two specs
compare equal whenever they have the same structure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional, Tuple

from .errors import Loc

MULTIPLICITIES = ("set", "one", "lone", "some")
BUILTINS = ("Int", "String")
INT_OPS = ("=", "!=", "<", "<=", ">", ">=")

Atom = str
Tuple_ = Tuple[Atom, ...]


def _meta(**kw):
    return field(compare=False, repr=False, kw_only=True, **kw)


# -- expressions ------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    # one frozenset of type names per column; filled in by the analyzer
    cols: Optional[Tuple[FrozenSet[str], ...]] = _meta(default=None)

    @property
    def arity(self) -> Optional[int]:
        return None if self.cols is None else len(self.cols)


@dataclass(frozen=True)
class Name(Expr):
    """An identifier the parser could not classify; removed by analysis."""

    name: str
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class VarRef(Expr):
    name: str


@dataclass(frozen=True)
class SigRef(Expr):
    name: str


@dataclass(frozen=True)
class FieldRef(Expr):
    qname: str  # "Owner.field"

    @property
    def field_name(self) -> str:
        return self.qname.split(".", 1)[1]

    @property
    def owner(self) -> str:
        return self.qname.split(".", 1)[0]


@dataclass(frozen=True)
class Join(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Union(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class StringLit(Expr):
    text: str


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class Card(Expr):
    expr: Expr


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Equal(Formula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class In(Formula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class IntCompare(Formula):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Quantified(Formula):
    kind: str  # "all" | "some"
    var: str
    over: str
    body: Formula


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: Tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class PredCall(Formula):
    name: str
    args: Tuple[Expr, ...]
    # resolved declaration, attached by the analyzer
    decl: Optional["PredDecl"] = _meta(default=None)
    loc: Optional[Loc] = _meta(default=None)


# -- paragraphs -------------------------------------------------------------


@dataclass(frozen=True)
class FieldDecl:
    name: str
    mult: str
    target: str
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class SigDecl:
    name: str
    is_abstract: bool = False
    is_one: bool = False
    parent: Optional[str] = None
    fields: Tuple[FieldDecl, ...] = ()
    appended_facts: Tuple[Formula, ...] = ()
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class FactDecl:
    name: Optional[str]
    body: Tuple[Formula, ...]
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class PredDecl:
    name: str
    params: Tuple[Tuple[str, str], ...]
    body: Tuple[Formula, ...]
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class AssertDecl:
    name: str
    body: Tuple[Formula, ...]
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class Command:
    kind: str  # "check" | "run"
    target: Optional[str] = None
    block: Optional[Tuple[Formula, ...]] = None
    scope: Optional[int] = None
    loc: Optional[Loc] = _meta(default=None)


@dataclass(frozen=True)
class Spec:
    sigs: Tuple[SigDecl, ...] = ()
    facts: Tuple[FactDecl, ...] = ()
    preds: Tuple[PredDecl, ...] = ()
    asserts: Tuple[AssertDecl, ...] = ()
    commands: Tuple[Command, ...] = ()

    def __add__(self, other: "Spec") -> "Spec":
        return Spec(
            self.sigs + other.sigs,
            self.facts + other.facts,
            self.preds + other.preds,
            self.asserts + other.asserts,
            self.commands + other.commands,
        )

    def is_empty(self) -> bool:
        return not (self.sigs or self.facts or self.preds or self.asserts or self.commands)


@dataclass(frozen=True)
class Violation:
    message: str
    loc: Optional[Loc] = None


def _duplicates(names):
    return [n for n, c in Counter(names).items() if c > 1]


def structural_check(spec: Spec) -> list[Violation]:
    """Report duplicate names, abstract/one conflicts and empty fact bodies."""
    out: list[Violation] = []
    locs = {}
    for kind, decls in (
        ("signature", spec.sigs),
        ("predicate", spec.preds),
        ("assertion", spec.asserts),
        ("fact", [f for f in spec.facts if f.name is not None]),
    ):
        for d in decls:
            locs.setdefault((kind, d.name), []).append(d.loc)
        for name in _duplicates(d.name for d in decls):
            out.append(Violation(f"duplicate {kind} {name}", locs[(kind, name)][1]))
    for sig in spec.sigs:
        if sig.is_abstract and sig.is_one:
            out.append(Violation(f"signature {sig.name} cannot be both abstract and one", sig.loc))
        for name in _duplicates(f.name for f in sig.fields):
            out.append(Violation(f"duplicate field {name} in signature {sig.name}", sig.loc))
        for f in sig.fields:
            if f.mult not in MULTIPLICITIES:
                out.append(Violation(f"bad multiplicity {f.mult!r} on field {f.name}", f.loc))
    for fact in spec.facts:
        if not fact.body:
            label = f"fact {fact.name}" if fact.name else "fact"
            out.append(Violation(f"{label} has an empty body", fact.loc))
    for pred in spec.preds:
        for name in _duplicates(p for p, _ in pred.params):
            out.append(Violation(f"duplicate parameter {name} in predicate {pred.name}", pred.loc))
    return out


# -- search space -----------------------------------------------------------


@dataclass(frozen=True)
class Bounds:
    default_scope: int
    per_sig: Mapping[str, int]
    int_pool: Tuple[int, ...]
    string_pool: Tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "defaultScope": self.default_scope,
            "perSig": {k: self.per_sig[k] for k in sorted(self.per_sig)},
            "intPool": [min(self.int_pool), max(self.int_pool)] if self.int_pool else [],
            "stringPool": list(self.string_pool),
        }


def int_atom(value: int) -> Atom:
    return str(value)


def string_atom(text: str) -> Atom:
    return f'"{text}"'


def atom_int_value(atom: Atom) -> int:
    return int(atom)


@dataclass(frozen=True)
class Universe:
    """Atoms per signature.

    ``atoms_of[S]`` lists every atom of S including those of its
    descendants, so a parent's list is a superset of each child's.  The
    builtins ``Int`` and ``String`` map to the pooled atoms.
    """

    atoms_of: Mapping[str, Tuple[Atom, ...]]
    int_atoms: Tuple[Atom, ...] = ()
    string_atoms: Tuple[Atom, ...] = ()

    def atoms(self, sig: str) -> Tuple[Atom, ...]:
        if sig == "Int":
            return self.int_atoms
        if sig == "String":
            return self.string_atoms
        return self.atoms_of.get(sig, ())

    def size(self) -> int:
        return len({a for atoms in self.atoms_of.values() for a in atoms})


@dataclass(frozen=True)
class Instance:
    universe: Universe
    relations: Mapping[str, FrozenSet[Tuple_]]

    def to_json(self) -> dict:
        return {
            "sigs": {s: sorted(self.universe.atoms_of[s]) for s in sorted(self.universe.atoms_of)},
            "fields": {
                q: sorted(list(t) for t in self.relations[q]) for q in sorted(self.relations)
            },
        }


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # "valid" | "counterexample"
    bounds: Bounds
    instance: Optional[Instance] = None
    witness: Optional[Dict[str, Atom]] = None

    def __post_init__(self):
        if self.verdict == "counterexample" and (self.instance is None or self.witness is None):
            raise ValueError("a counterexample needs an instance and a witness")

    @property
    def is_valid(self) -> bool:
        return self.verdict == "valid"
