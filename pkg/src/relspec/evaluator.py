"""Reference semantics: evaluate analyzed expressions and formulas on an instance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from .analyzer import TypedSpec
from .errors import EvalError, StructureError
from .model import (
    And, Atom, Card, Equal, Expr, FieldRef, Formula, Implies, In, Instance,
    IntCompare, IntLit, Join, Not, Or, PredCall, Quantified, SigRef, StringLit, Union,
    VarRef, atom_int_value, int_atom, string_atom,
)

Env = Mapping[str, Atom]
Rel = FrozenSet[Tuple[Atom, ...]]


@dataclass(frozen=True)
class RelValue:
    arity: int
    tuples: Rel

    def __post_init__(self):
        if any(len(t) != self.arity for t in self.tuples):
            raise ValueError(f"tuple arity differs from {self.arity}")


def join(left: Rel, right: Rel) -> Rel:
    index: Dict[Atom, list] = {}
    for t in right:
        index.setdefault(t[0], []).append(t[1:])
    return frozenset(a[:-1] + b for a in left for b in index.get(a[-1], ()))


def _rel(inst: Instance, env: Env, e: Expr) -> Rel:
    if isinstance(e, VarRef):
        return frozenset({(env[e.name],)})
    if isinstance(e, SigRef):
        return frozenset((a,) for a in inst.universe.atoms(e.name))
    if isinstance(e, FieldRef):
        return inst.relations[e.qname]
    if isinstance(e, Join):
        return join(_rel(inst, env, e.left), _rel(inst, env, e.right))
    if isinstance(e, Union):
        return _rel(inst, env, e.left) | _rel(inst, env, e.right)
    if isinstance(e, StringLit):
        return frozenset({(string_atom(e.text),)})
    if isinstance(e, IntLit):
        return frozenset({(int_atom(e.value),)})
    raise EvalError(f"cannot evaluate {e!r} as a relation")


def eval_expr(inst: Instance, env: Env, e: Expr) -> RelValue:
    if e.arity is None:
        raise EvalError("expression has not been analyzed")
    return RelValue(e.arity, _rel(inst, env, e))


def _int(inst: Instance, env: Env, e: Expr) -> int:
    if isinstance(e, Card):
        return len(_rel(inst, env, e.expr))
    if isinstance(e, IntLit):
        return e.value
    # an Int-typed relation denotes the sum of its atoms; a singleton is its value
    return sum(atom_int_value(t[0]) for t in _rel(inst, env, e))


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_formula(inst: Instance, env: Env, f: Formula) -> bool:
    if isinstance(f, Equal):
        return _rel(inst, env, f.left) == _rel(inst, env, f.right)
    if isinstance(f, In):
        return _rel(inst, env, f.left) <= _rel(inst, env, f.right)
    if isinstance(f, IntCompare):
        return _CMP[f.op](_int(inst, env, f.left), _int(inst, env, f.right))
    if isinstance(f, Quantified):
        atoms = inst.universe.atoms(f.over)
        test = (eval_formula(inst, {**env, f.var: a}, f.body) for a in atoms)
        return all(test) if f.kind == "all" else any(test)
    if isinstance(f, Not):
        return not eval_formula(inst, env, f.body)
    if isinstance(f, And):
        return all(eval_formula(inst, env, p) for p in f.parts)
    if isinstance(f, Or):
        return eval_formula(inst, env, f.left) or eval_formula(inst, env, f.right)
    if isinstance(f, Implies):
        return not eval_formula(inst, env, f.left) or eval_formula(inst, env, f.right)
    if isinstance(f, PredCall):
        return eval_formula(inst, pred_env(inst, env, f), And(f.decl.body))
    raise EvalError(f"cannot evaluate {f!r}")


def pred_env(inst: Instance, env: Env, call: PredCall) -> Dict[str, Atom]:
    if call.decl is None:
        raise EvalError(f"call to {call.name} has not been analyzed")
    bound = {}
    for (pname, _), arg in zip(call.decl.params, call.args):
        value = _rel(inst, env, arg)
        if len(value) != 1:
            raise EvalError(
                f"argument {pname} of {call.name} must be a single atom, got {len(value)}")
        (bound[pname],) = next(iter(value))
    return bound


def witness(inst: Instance, f: Formula, env: Optional[Env] = None) -> Dict[str, Atom]:
    """Bindings of the outermost universal quantifiers that make ``f`` false.

    Descends through leading ``all`` quantifiers (and into the first false
    conjunct of an ``and``), picking the first atom in universe order whose
    instantiation is false.  Returns ``{}`` if ``f`` is true.
    """
    env = dict(env or {})
    out: Dict[str, Atom] = {}
    while True:
        if isinstance(f, And):
            false = [p for p in f.parts if not eval_formula(inst, env, p)]
            if not false:
                return out
            f = false[0]
            continue
        if isinstance(f, Quantified) and f.kind == "all":
            for a in inst.universe.atoms(f.over):
                if not eval_formula(inst, {**env, f.var: a}, f.body):
                    env[f.var] = out[f.var] = a
                    f = f.body
                    break
            else:
                return out
            continue
        return out


# -- instance validation ------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    violations: Tuple[Tuple[Formula, Dict[str, Atom]], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def check_structure(typed: TypedSpec, inst: Instance) -> List[str]:
    """List every way ``inst`` breaks the universe and relation invariants."""
    problems: List[str] = []
    u = inst.universe
    for s in typed.sig_order:
        if s not in u.atoms_of:
            problems.append(f"signature {s} missing from universe")
    if problems:
        return problems
    owner: Dict[Atom, str] = {}
    for s in typed.sig_order:
        info = typed.hierarchy[s]
        atoms = u.atoms_of[s]
        if len(set(atoms)) != len(atoms):
            problems.append(f"duplicate atoms in {s}")
        child_atoms = [a for c in info.children for a in u.atoms_of[c]]
        if len(set(child_atoms)) != len(child_atoms):
            problems.append(f"children of {s} share atoms")
        if not set(child_atoms) <= set(atoms):
            problems.append(f"atoms of a child of {s} are not atoms of {s}")
        own = [a for a in atoms if a not in set(child_atoms)]
        if info.is_abstract and own:
            problems.append(f"abstract {s} has atoms outside its children: {sorted(own)}")
        if info.is_one and len(atoms) != 1:
            problems.append(f"one sig {s} has {len(atoms)} atoms")
        for a in own:
            if a in owner:
                problems.append(f"atom {a} belongs to both {owner[a]} and {s}")
            owner[a] = s
    for q, info in typed.field_table.items():
        if q not in inst.relations:
            problems.append(f"relation {q} missing")
            continue
        src = set(u.atoms(info.owner))
        dst = set(u.atoms(info.target))
        for t in inst.relations[q]:
            if len(t) != 2:
                problems.append(f"relation {q} has a tuple of arity {len(t)}")
            elif t[0] not in src or t[1] not in dst:
                problems.append(f"relation {q} tuple {t} leaves {info.owner} x {info.target}")
    extra = set(inst.relations) - set(typed.field_table)
    if extra:
        problems.append(f"unknown relations {sorted(extra)}")
    return problems


def verify_instance(typed: TypedSpec, inst: Instance) -> Verdict:
    problems = check_structure(typed, inst)
    if problems:
        raise StructureError("; ".join(problems))
    bad = tuple(
        (f, witness(inst, f)) for f in typed.closed_facts if not eval_formula(inst, {}, f)
    )
    return Verdict(bad)
