"""Name resolution, typing and desugaring.

:func:`analyze` turns a parsed :class:`Spec` into a :class:`TypedSpec`:
identifiers become variable, signature or field references, every
expression carries its column types, appended signature facts and field
multiplicities become closed formulas, and predicate calls are linked to
their declarations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (
    AnalysisError, ArityError, CycleError, ResolveError, StructureViolations,
    TypeCheckError, UnknownAssert, UnknownPred,
)
from .model import (
    BUILTINS, And, AssertDecl, Card, Command, Equal, Expr, FieldRef, Formula, Implies,
    In, IntCompare, IntLit, Join, Name, Not, Or, PredCall, PredDecl, Quantified,
    SigDecl, SigRef, Spec, StringLit, Union, VarRef, structural_check,
)
from .printer import format_formula

THIS = "this"
_INT = frozenset({"Int"})


@dataclass(frozen=True)
class SigInfo:
    name: str
    parent: Optional[str]
    children: Tuple[str, ...]
    is_abstract: bool
    is_one: bool
    depth: int


@dataclass(frozen=True)
class FieldInfo:
    owner: str
    name: str
    mult: str
    target: str

    @property
    def qname(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class TypedSpec:
    sig_order: Tuple[str, ...]
    hierarchy: Mapping[str, SigInfo]
    field_table: Mapping[str, FieldInfo]
    fact_constraints: Tuple[Formula, ...]
    appended_constraints: Tuple[Formula, ...]
    multiplicity_constraints: Tuple[Formula, ...]
    preds: Mapping[str, PredDecl]
    asserts: Mapping[str, AssertDecl]
    commands: Tuple[Command, ...]
    string_literals: Tuple[str, ...]
    spec: Optional[Spec] = field(default=None, compare=False, repr=False)

    @property
    def closed_facts(self) -> Tuple[Formula, ...]:
        return self.fact_constraints + self.appended_constraints + self.multiplicity_constraints

    # -- hierarchy queries ----------------------------------------------------

    def ancestors(self, sig: str) -> List[str]:
        """``sig`` followed by its ancestors, nearest first."""
        out = []
        cur: Optional[str] = sig
        while cur is not None and cur in self.hierarchy:
            out.append(cur)
            cur = self.hierarchy[cur].parent
        return out or [sig]

    def top(self, sig: str) -> str:
        return self.ancestors(sig)[-1]

    def descendants(self, sig: str) -> List[str]:
        """``sig`` and all sigs below it, in pre-order."""
        out = [sig]
        for child in self.hierarchy[sig].children:
            out.extend(self.descendants(child))
        return out

    def top_level(self) -> List[str]:
        return [s for s in self.sig_order if self.hierarchy[s].parent is None]

    def related(self, a: str, b: str) -> bool:
        """True when a and b lie on one path of the hierarchy (or are the same builtin)."""
        if a in BUILTINS or b in BUILTINS:
            return a == b
        return a in self.ancestors(b) or b in self.ancestors(a)

    def fields_of(self, sig: str) -> List[FieldInfo]:
        """Declared and inherited fields, nearest declaration first."""
        return [f for s in self.ancestors(sig) for f in self.field_table.values() if f.owner == s]

    def singletons_under(self, sig: str) -> int:
        return sum(1 for s in self.descendants(sig) if self.hierarchy[s].is_one)


def analyze(spec: Spec) -> TypedSpec:
    violations = structural_check(spec)
    if violations:
        raise StructureViolations(violations)
    hierarchy, order = _build_hierarchy(spec.sigs)
    fields = _build_fields(spec.sigs, hierarchy)
    typed = TypedSpec(order, hierarchy, fields, (), (), (), {}, {}, (), (), spec)
    resolver = _Resolver(typed)

    preds: Dict[str, PredDecl] = {}
    raw_preds = {p.name: p for p in spec.preds}
    for name in _pred_order(raw_preds):
        p = raw_preds[name]
        env = {}
        for pname, ptype in p.params:
            resolver.require_type(ptype, p.loc)
            env[pname] = ptype
        preds[name] = replace(p, body=tuple(resolver.formula(f, env, preds) for f in p.body))
    preds = {p.name: preds[p.name] for p in spec.preds}

    facts = tuple(resolver.formula(f, {}, preds) for fact in spec.facts for f in fact.body)
    appended = []
    for sig in spec.sigs:
        own = [f.name for f in typed.fields_of(sig.name)]
        for f in desugar_appended_facts(sig, own):
            appended.append(resolver.formula(f, {}, preds))
    asserts = {
        a.name: replace(a, body=tuple(resolver.formula(f, {}, preds) for f in a.body))
        for a in spec.asserts
    }
    commands = []
    for c in spec.commands:
        if c.kind == "check" and c.target not in asserts:
            raise UnknownAssert(f"check names unknown assertion {c.target}", c.loc)
        if c.kind == "run" and c.block is None and c.target not in preds:
            raise UnknownPred(f"run names unknown predicate {c.target}", c.loc)
        if c.block is not None:
            c = replace(c, block=tuple(resolver.formula(f, {}, preds) for f in c.block))
        commands.append(c)

    typed = replace(
        typed,
        fact_constraints=facts,
        appended_constraints=tuple(appended),
        preds=preds,
        asserts=asserts,
        commands=tuple(commands),
    )
    mult = tuple(resolver.formula(f, {}, preds) for f in implicit_multiplicity_constraints(typed))
    literals = sorted({s for f in _all_formulas(typed, mult) for s in string_literals(f)})
    return replace(typed, multiplicity_constraints=mult, string_literals=tuple(literals))


def _all_formulas(typed: TypedSpec, extra: Iterable[Formula]) -> Iterable[Formula]:
    yield from typed.closed_facts
    yield from extra
    for p in typed.preds.values():
        yield from p.body
    for a in typed.asserts.values():
        yield from a.body
    for c in typed.commands:
        yield from c.block or ()


def _build_hierarchy(sigs: Sequence[SigDecl]):
    by_name = {s.name: s for s in sigs}
    for s in sigs:
        if s.name in BUILTINS:
            raise ResolveError(f"{s.name} is a builtin and cannot be redeclared", s.loc)
        if s.parent is None:
            continue
        if s.parent not in by_name:
            raise ResolveError(f"signature {s.name} extends unknown signature {s.parent}", s.loc)
        if by_name[s.parent].is_one:
            raise AnalysisError(f"signature {s.name} cannot extend singleton {s.parent}", s.loc)
    depth: Dict[str, int] = {}
    for s in sigs:
        seen = [s.name]
        cur = by_name[s.name].parent
        while cur is not None:
            if cur in seen:
                raise CycleError(f"extends cycle through {' -> '.join(seen + [cur])}", s.loc)
            seen.append(cur)
            cur = by_name[cur].parent
        depth[s.name] = len(seen) - 1
    hierarchy = {
        s.name: SigInfo(
            s.name, s.parent, tuple(c.name for c in sigs if c.parent == s.name),
            s.is_abstract, s.is_one, depth[s.name],
        )
        for s in sigs
    }
    return hierarchy, tuple(s.name for s in sigs)


def _build_fields(sigs: Sequence[SigDecl], hierarchy) -> Dict[str, FieldInfo]:
    def ancestors(name):
        while name is not None:
            yield name
            name = hierarchy[name].parent

    declared = {s.name: {f.name for f in s.fields} for s in sigs}
    table: Dict[str, FieldInfo] = {}
    for s in sigs:
        for fd in s.fields:
            if fd.target not in hierarchy and fd.target not in BUILTINS:
                raise ResolveError(f"field {fd.name} has unknown type {fd.target}", fd.loc)
            for anc in list(ancestors(s.name))[1:]:
                if fd.name in declared[anc]:
                    raise ResolveError(f"field {fd.name} of {s.name} is already declared in {anc}", fd.loc)
            info = FieldInfo(s.name, fd.name, fd.mult, fd.target)
            table[info.qname] = info
    return table


def _pred_order(preds: Mapping[str, PredDecl]) -> List[str]:
    """Topological order of the predicate call graph (callees first)."""
    calls = {name: sorted({c.name for f in p.body for c in pred_calls(f)}) for name, p in preds.items()}
    order: List[str] = []
    state: Dict[str, int] = {}

    def visit(name, path):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            raise CycleError(f"recursive predicate {' -> '.join(path + [name])}", preds[name].loc)
        state[name] = 1
        for callee in calls[name]:
            if callee in preds:
                visit(callee, path + [name])
        state[name] = 2
        order.append(name)

    for name in preds:
        visit(name, [])
    return order


# -- desugaring ---------------------------------------------------------------


def desugar_appended_facts(sig: SigDecl, field_names: Optional[Iterable[str]] = None) -> List[Formula]:
    """Close each appended formula of ``sig`` under ``all this: sig``.

    A field name standing on its own (not already the right-hand side of a
    join) becomes ``this.f``.  ``field_names`` defaults to the fields
    declared on ``sig`` itself; the analyzer passes inherited ones too.
    """
    names = frozenset(f.name for f in sig.fields) if field_names is None else frozenset(field_names)
    return [
        Quantified("all", THIS, sig.name, _prefix_this(f, names))
        for f in sig.appended_facts
    ]


def _prefix_this(node, names: FrozenSet[str]):
    if isinstance(node, Name):
        return Join(VarRef(THIS), node) if node.name in names else node
    if isinstance(node, Join):
        right = node.right if isinstance(node.right, Name) else _prefix_this(node.right, names)
        return Join(_prefix_this(node.left, names), right)
    if isinstance(node, Union):
        return Union(_prefix_this(node.left, names), _prefix_this(node.right, names))
    if isinstance(node, Card):
        return Card(_prefix_this(node.expr, names))
    if isinstance(node, (Equal, In)):
        return type(node)(_prefix_this(node.left, names), _prefix_this(node.right, names))
    if isinstance(node, IntCompare):
        return IntCompare(node.op, _prefix_this(node.left, names), _prefix_this(node.right, names))
    if isinstance(node, Quantified):
        return replace(node, body=_prefix_this(node.body, names))
    if isinstance(node, Not):
        return Not(_prefix_this(node.body, names))
    if isinstance(node, And):
        return And(tuple(_prefix_this(p, names) for p in node.parts))
    if isinstance(node, (Or, Implies)):
        return type(node)(_prefix_this(node.left, names), _prefix_this(node.right, names))
    if isinstance(node, PredCall):
        return replace(node, args=tuple(_prefix_this(a, names) for a in node.args))
    return node


def implicit_multiplicity_constraints(typed: TypedSpec) -> List[Formula]:
    """One closed cardinality formula per ``one``/``lone``/``some`` field."""
    ops = {"one": "=", "lone": "<=", "some": ">="}
    out: List[Formula] = []
    for info in typed.field_table.values():
        if info.mult == "set":
            continue
        row = Card(Join(VarRef("x"), FieldRef(info.qname)))
        out.append(Quantified("all", "x", info.owner, IntCompare(ops[info.mult], row, IntLit(1))))
    return out


# -- traversal helpers --------------------------------------------------------


def _children(node):
    if isinstance(node, (Join, Union, Equal, In, IntCompare, Or, Implies)):
        return (node.left, node.right)
    if isinstance(node, Card):
        return (node.expr,)
    if isinstance(node, (Quantified, Not)):
        return (node.body,)
    if isinstance(node, And):
        return node.parts
    if isinstance(node, PredCall):
        return node.args
    return ()


def walk(node):
    yield node
    for child in _children(node):
        yield from walk(child)


def pred_calls(f: Formula) -> List[PredCall]:
    return [n for n in walk(f) if isinstance(n, PredCall)]


def string_literals(f: Formula) -> List[str]:
    return [n.text for n in walk(f) if isinstance(n, StringLit)]


def free_variables(node, bound: FrozenSet[str] = frozenset()) -> set:
    if isinstance(node, VarRef):
        return set() if node.name in bound else {node.name}
    if isinstance(node, Quantified):
        return free_variables(node.body, bound | {node.var})
    out = set()
    for child in _children(node):
        out |= free_variables(child, bound)
    return out


# -- resolution and typing ----------------------------------------------------


class _Resolver:
    def __init__(self, typed: TypedSpec):
        self.t = typed
        self.by_field_name: Dict[str, List[FieldInfo]] = {}
        for info in typed.field_table.values():
            self.by_field_name.setdefault(info.name, []).append(info)

    def require_type(self, name: str, loc=None):
        if name not in self.t.hierarchy and name not in BUILTINS:
            raise ResolveError(f"unknown signature {name}", loc)

    def _overlap(self, a: FrozenSet[str], b: FrozenSet[str]) -> bool:
        return any(self.t.related(x, y) for x in a for y in b)

    # -- formulas -------------------------------------------------------------

    def formula(self, f: Formula, env: Mapping[str, str], preds: Mapping[str, PredDecl]) -> Formula:
        try:
            return self._formula(f, env, preds)
        except AnalysisError as exc:
            if exc.loc is None:
                # innermost formula with a located name pins the diagnostic
                exc.loc = next((n.loc for n in walk(f) if getattr(n, "loc", None)), None)
            raise

    def _formula(self, f: Formula, env: Mapping[str, str], preds: Mapping[str, PredDecl]) -> Formula:
        if isinstance(f, (Equal, In)):
            left, right = self.rel(f.left, env), self.rel(f.right, env)
            op = "=" if isinstance(f, Equal) else "in"
            self._same_shape(left, right, op)
            return type(f)(left, right)
        if isinstance(f, IntCompare):
            return IntCompare(f.op, self.int_expr(f.left, env), self.int_expr(f.right, env))
        if isinstance(f, Quantified):
            self.require_type(f.over)
            if f.var == THIS and not (env == {} and f.over in self.t.hierarchy):
                raise AnalysisError("'this' is reserved and cannot be rebound")
            return replace(f, body=self.formula(f.body, {**env, f.var: f.over}, preds))
        if isinstance(f, Not):
            return Not(self.formula(f.body, env, preds))
        if isinstance(f, And):
            return And(tuple(self.formula(p, env, preds) for p in f.parts))
        if isinstance(f, (Or, Implies)):
            return type(f)(self.formula(f.left, env, preds), self.formula(f.right, env, preds))
        if isinstance(f, PredCall):
            decl = preds.get(f.name)
            if decl is None:
                raise UnknownPred(f"unknown predicate {f.name}", f.loc)
            if len(f.args) != len(decl.params):
                raise ArityError(
                    f"predicate {f.name} takes {len(decl.params)} arguments, got {len(f.args)}", f.loc)
            args = []
            for arg, (pname, ptype) in zip(f.args, decl.params):
                a = self.rel(arg, env)
                if a.arity != 1:
                    raise ArityError(f"argument for {pname} of {f.name} must be unary", f.loc)
                if not self._overlap(a.cols[0], frozenset({ptype})):
                    raise TypeCheckError(f"argument for {pname} of {f.name} cannot be a {ptype}", f.loc)
                args.append(a)
            return replace(f, args=tuple(args), decl=decl)
        raise AnalysisError(f"unsupported formula {f!r}")

    def _same_shape(self, left: Expr, right: Expr, op: str):
        if left.arity != right.arity:
            raise ArityError(
                f"'{op}' between arities {left.arity} and {right.arity}: "
                f"{_show(left)} {op} {_show(right)}")
        for a, b in zip(left.cols, right.cols):
            if not self._overlap(a, b):
                raise TypeCheckError(
                    f"'{op}' between disjoint types {_types(a)} and {_types(b)}: "
                    f"{_show(left)} {op} {_show(right)}")

    # -- expressions ----------------------------------------------------------

    def int_expr(self, e: Expr, env) -> Expr:
        if isinstance(e, Card):
            inner = self.rel(e.expr, env)
            return Card(inner, cols=(_INT,))
        if isinstance(e, IntLit):
            return IntLit(e.value, cols=(_INT,))
        r = self.rel(e, env)
        if r.arity != 1 or r.cols[0] != _INT:
            raise TypeCheckError(f"comparing an integer with relation {_show(r)}")
        return r

    def rel(self, e: Expr, env, hint: Optional[FrozenSet[str]] = None) -> Expr:
        """Resolve an expression used as a relation (not a cardinality)."""
        if isinstance(e, Card):
            raise TypeCheckError(f"cardinality {_show(e)} used where a relation is expected")
        if isinstance(e, (Name, VarRef)):
            return self._name(e, env, hint)
        if isinstance(e, SigRef):
            self.require_type(e.name)
            return SigRef(e.name, cols=(frozenset({e.name}),))
        if isinstance(e, FieldRef):
            info = self.t.field_table.get(e.qname)
            if info is None:
                raise ResolveError(f"unknown field {e.qname}")
            return FieldRef(e.qname, cols=(frozenset({info.owner}), frozenset({info.target})))
        if isinstance(e, StringLit):
            return StringLit(e.text, cols=(frozenset({"String"}),))
        if isinstance(e, IntLit):
            return IntLit(e.value, cols=(_INT,))
        if isinstance(e, Join):
            left = self.rel(e.left, env, hint)
            right = self.rel(e.right, env, left.cols[-1])
            if not self._overlap(left.cols[-1], right.cols[0]):
                raise TypeCheckError(
                    f"join of disjoint types {_types(left.cols[-1])} and {_types(right.cols[0])} "
                    f"in {_show(e)}")
            cols = left.cols[:-1] + right.cols[1:]
            if not cols:
                raise ArityError(f"join {_show(e)} has arity 0")
            return Join(left, right, cols=cols)
        if isinstance(e, Union):
            left, right = self.rel(e.left, env, hint), self.rel(e.right, env, hint)
            if left.arity != right.arity:
                raise ArityError(f"union of arities {left.arity} and {right.arity}: {_show(e)}")
            cols = []
            for a, b in zip(left.cols, right.cols):
                merged = a | b
                if (merged & set(BUILTINS)) and len(merged) > 1:
                    raise TypeCheckError(f"union mixes {_types(a)} with {_types(b)}: {_show(e)}")
                cols.append(merged)
            return Union(left, right, cols=tuple(cols))
        raise AnalysisError(f"unsupported expression {e!r}")

    def _name(self, e, env, hint):
        name = e.name
        loc = getattr(e, "loc", None)
        if name in env:
            return VarRef(name, cols=(frozenset({env[name]}),))
        if isinstance(e, VarRef) or name == THIS:
            raise ResolveError(f"unbound variable {name}", loc)
        if name in self.t.hierarchy or name in BUILTINS:
            return SigRef(name, cols=(frozenset({name}),))
        candidates = self.by_field_name.get(name, [])
        if len(candidates) > 1 and hint is not None:
            narrowed = [c for c in candidates if self._overlap(hint, frozenset({c.owner}))]
            candidates = narrowed or candidates
        if not candidates:
            raise ResolveError(f"unknown name {name}", loc)
        if len(candidates) > 1:
            owners = ", ".join(c.owner for c in candidates)
            raise ResolveError(f"ambiguous field {name} (declared in {owners})", loc)
        info = candidates[0]
        return FieldRef(info.qname, cols=(frozenset({info.owner}), frozenset({info.target})))


def _show(e: Expr) -> str:
    from .printer import format_expr
    return format_expr(e)


def _types(cols: FrozenSet[str]) -> str:
    return "+".join(sorted(cols))


def dump_typed(typed: TypedSpec) -> str:
    """Deterministic text listing of hierarchy, fields and closed constraints."""
    lines = ["signatures:"]
    for name in typed.sig_order:
        info = typed.hierarchy[name]
        flags = [k for k, v in (("abstract", info.is_abstract), ("one", info.is_one)) if v]
        head = " ".join(flags + ["sig", name])
        if info.parent:
            head += f" extends {info.parent}"
        lines.append(f"  {head}")
    lines.append("fields:")
    for q, info in typed.field_table.items():
        lines.append(f"  {q}: {info.mult} {info.target}")
    lines.append("constraints:")
    for tag, group in (
        ("fact", typed.fact_constraints),
        ("appended", typed.appended_constraints),
        ("multiplicity", typed.multiplicity_constraints),
    ):
        for f in group:
            lines.append(f"  [{tag}] {format_formula(f)}")
    lines.append(
        f"summary: {len(typed.sig_order)} signatures, {len(typed.field_table)} fields, "
        f"{len(typed.fact_constraints)} fact, {len(typed.appended_constraints)} appended, "
        f"{len(typed.multiplicity_constraints)} multiplicity constraints"
    )
    return "\n".join(lines) + "\n"
