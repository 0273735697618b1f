"""Bounded model finding.

Two engines share the same search space:

* :func:`enumerate_instances` / :func:`count_instances` walk every
  candidate instance and test the goal with the reference evaluator.  They
  are the oracle and refuse problems above a candidate ceiling.
* :func:`solve` does backtracking search over relation rows.  Field
  multiplicities are compiled into each row's domain, ground constraints
  are evaluated three-valued as rows get decided, single-row constraints
  prune that row's domain, and rows no pending constraint depends on are
  never branched on.
"""

from __future__ import annotations

import itertools
import logging
import sys
import time
from dataclasses import dataclass
from math import prod
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union as U

from .analyzer import TypedSpec
from .errors import BoundsError, EvalError, ExplosionError, FinderTimeout, UnknownAssert, UnknownPred
from .evaluator import eval_formula, witness
from .model import (
    And, Atom, Bounds, Card, CheckResult, Equal, Expr, FieldRef, Formula, Implies, In, Instance,
    IntCompare, IntLit, Join, Not, Or, PredCall, Quantified, SigRef, StringLit, Union, Universe,
    VarRef, atom_int_value, int_atom, string_atom,
)

log = logging.getLogger(__name__)

DEFAULT_SCOPE = 3
DEFAULT_BITWIDTH = 4
DEFAULT_CEILING = 10 ** 7

Row = Tuple[str, Atom]  # (qualified field, owner atom)


# -- bounds and universes -----------------------------------------------------


def build_bounds(
    typed: TypedSpec,
    requested_scope: Optional[int] = None,
    *,
    bitwidth: int = DEFAULT_BITWIDTH,
    string_pool: Optional[Sequence[str]] = None,
) -> Bounds:
    """Scope each top-level signature at max(scope, its singleton count)."""
    if requested_scope is not None and requested_scope < 1:
        raise BoundsError(f"scope must be at least 1, got {requested_scope}")
    scope = DEFAULT_SCOPE if requested_scope is None else requested_scope
    per_sig = {t: max(scope, typed.singletons_under(t)) for t in typed.top_level()}
    half = 2 ** (bitwidth - 1)
    pool = typed.string_literals if string_pool is None else tuple(sorted(set(string_pool)))
    return Bounds(scope, per_sig, tuple(range(-half, half)), tuple(pool))


@dataclass(frozen=True)
class UniverseShape:
    """How many fresh atoms each non-abstract, non-singleton sig receives."""

    fresh: Tuple[Tuple[str, int], ...]

    @property
    def fresh_count(self) -> Dict[str, int]:
        return dict(self.fresh)

    @property
    def total(self) -> int:
        return sum(n for _, n in self.fresh)


def _distributions(k: int, cap: int) -> Iterator[Tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    for first in range(cap + 1):
        for rest in _distributions(k - 1, cap - first):
            yield (first,) + rest


def universe_shapes(typed: TypedSpec, bounds: Bounds) -> List[UniverseShape]:
    """All admissible shapes, by total fresh atoms, then favouring earlier sigs."""
    eligible = [s for s in typed.sig_order
                if not typed.hierarchy[s].is_abstract and not typed.hierarchy[s].is_one]
    per_top = []
    for top in typed.top_level():
        sub = [s for s in typed.descendants(top) if s in eligible]
        cap = max(0, bounds.per_sig[top] - typed.singletons_under(top))
        per_top.append([dict(zip(sub, d)) for d in _distributions(len(sub), cap)])
    shapes = []
    for combo in itertools.product(*per_top):
        counts: Dict[str, int] = {}
        for part in combo:
            counts.update(part)
        vec = tuple(counts.get(s, 0) for s in eligible)
        shapes.append((sum(vec), tuple(-c for c in vec), UniverseShape(tuple(zip(eligible, vec)))))
    shapes.sort(key=lambda x: (x[0], x[1]))
    return [s for _, _, s in shapes]


def build_universe(typed: TypedSpec, bounds: Bounds, shape: UniverseShape) -> Universe:
    fresh = shape.fresh_count
    atoms_of: Dict[str, Tuple[Atom, ...]] = {}

    def fill(sig: str) -> Tuple[Atom, ...]:
        info = typed.hierarchy[sig]
        if info.is_one:
            own: Tuple[Atom, ...] = (sig,)
        else:
            own = tuple(f"{sig}${k}" for k in range(fresh.get(sig, 0)))
        for child in info.children:
            own += fill(child)
        atoms_of[sig] = own
        return own

    for top in typed.top_level():
        fill(top)
    return Universe(
        {s: atoms_of[s] for s in typed.sig_order},
        tuple(int_atom(i) for i in bounds.int_pool),
        tuple(string_atom(s) for s in bounds.string_pool),
    )


@dataclass(frozen=True)
class SearchProblem:
    typed: TypedSpec
    bounds: Bounds
    goal: Formula


def facts_problem(typed: TypedSpec, bounds: Bounds, extra: Sequence[Formula] = ()) -> SearchProblem:
    return SearchProblem(typed, bounds, And(tuple(typed.closed_facts) + tuple(extra)))


def _rows(typed: TypedSpec, universe: Universe) -> List[Row]:
    return [(q, a) for q, info in typed.field_table.items() for a in universe.atoms(info.owner)]


# -- oracle engine --------------------------------------------------------------


def _oracle_row_values(mult: str, targets: Sequence[Atom]) -> List[FrozenSet[Atom]]:
    # bit-vector order with the first target as the most significant bit
    n = len(targets)
    if mult in ("one", "lone"):
        singles = [frozenset({t}) for t in reversed(targets)]
        return singles if mult == "one" else [frozenset()] + singles
    out = [
        frozenset(t for i, t in enumerate(targets) if mask >> (n - 1 - i) & 1)
        for mask in range(2 ** n)
    ]
    return out[1:] if mult == "some" else out


def _row_value_count(mult: str, n: int) -> int:
    return {"one": n, "lone": n + 1, "some": 2 ** n - 1, "set": 2 ** n}[mult]


def candidate_count(problem: SearchProblem) -> int:
    """Number of candidate instances the enumerator would visit."""
    typed, total = problem.typed, 0
    for shape in universe_shapes(typed, problem.bounds):
        u = build_universe(typed, problem.bounds, shape)
        total += prod(
            _row_value_count(typed.field_table[q].mult, len(u.atoms(typed.field_table[q].target)))
            for q, _ in _rows(typed, u)
        )
    return total


def enumerate_instances(problem: SearchProblem, ceiling: int = DEFAULT_CEILING) -> Iterator[Instance]:
    """Yield every instance satisfying the goal, in deterministic order.

    Shapes come in :func:`universe_shapes` order; within a shape relation
    rows vary in field-table then owner order (last row fastest), and each
    row's values run as bit-vectors over the ordered target atoms.
    """
    total = candidate_count(problem)
    if total > ceiling:
        raise ExplosionError(f"{total} candidate instances exceed the ceiling of {ceiling}")
    typed = problem.typed
    for shape in universe_shapes(typed, problem.bounds):
        u = build_universe(typed, problem.bounds, shape)
        rows = _rows(typed, u)
        values = [
            _oracle_row_values(typed.field_table[q].mult, u.atoms(typed.field_table[q].target))
            for q, _ in rows
        ]
        for choice in itertools.product(*values):
            rels: Dict[str, set] = {q: set() for q in typed.field_table}
            for (q, owner), chosen in zip(rows, choice):
                rels[q].update((owner, t) for t in chosen)
            inst = Instance(u, {q: frozenset(v) for q, v in rels.items()})
            if eval_formula(inst, {}, problem.goal):
                yield inst


def count_instances(problem: SearchProblem, ceiling: int = DEFAULT_CEILING) -> int:
    return sum(1 for _ in enumerate_instances(problem, ceiling))


# -- search engine --------------------------------------------------------------


class _Undecided(Exception):
    def __init__(self, rows: FrozenSet[Row]):
        self.rows = rows


def _row_domain(mult: str, targets: Sequence[Atom]) -> Tuple[FrozenSet[Atom], ...]:
    sizes = {"one": [1], "lone": [0, 1], "some": range(1, len(targets) + 1),
             "set": range(0, len(targets) + 1)}[mult]
    return tuple(frozenset(c) for k in sizes for c in itertools.combinations(targets, k))


class _ShapeSearch:
    def __init__(self, typed: TypedSpec, universe: Universe, goal_parts: Sequence[Formula],
                 deadline: Optional[float]):
        self.typed = typed
        self.u = universe
        self.deadline = deadline
        self.rows = _rows(typed, universe)
        self.index = {r: i for i, r in enumerate(self.rows)}
        self.owner_rows: Dict[str, List[Row]] = {q: [] for q in typed.field_table}
        for r in self.rows:
            self.owner_rows[r[0]].append(r)
        self.domains = {
            r: _row_domain(typed.field_table[r[0]].mult, universe.atoms(typed.field_table[r[0]].target))
            for r in self.rows
        }
        self.constraints: List[Tuple[Formula, Dict[str, Atom]]] = []
        for f in goal_parts:
            self._ground(f, {})
        self.nodes = 0

    def _ground(self, f: Formula, env: Dict[str, Atom]):
        if isinstance(f, And):
            for p in f.parts:
                self._ground(p, env)
        elif isinstance(f, Quantified) and f.kind == "all":
            for a in self.u.atoms(f.over):
                self._ground(f.body, {**env, f.var: a})
        else:
            self.constraints.append((f, env))

    # three-valued evaluation over a partial assignment ----------------------

    def rel(self, e: Expr, env, A) -> FrozenSet[tuple]:
        if isinstance(e, VarRef):
            return frozenset({(env[e.name],)})
        if isinstance(e, SigRef):
            return frozenset((a,) for a in self.u.atoms(e.name))
        if isinstance(e, StringLit):
            return frozenset({(string_atom(e.text),)})
        if isinstance(e, IntLit):
            return frozenset({(int_atom(e.value),)})
        if isinstance(e, FieldRef):
            rows = self.owner_rows[e.qname]
            missing = frozenset(r for r in rows if r not in A)
            if missing:
                raise _Undecided(missing)
            return frozenset((r[1], t) for r in rows for t in A[r])
        if isinstance(e, Join) and isinstance(e.right, FieldRef):
            left = self.rel(e.left, env, A)
            q = e.right.qname
            needed = {(q, t[-1]) for t in left} & self.index.keys()
            missing = frozenset(r for r in needed if r not in A)
            if missing:
                raise _Undecided(missing)
            return frozenset(t[:-1] + (b,) for t in left if (q, t[-1]) in needed for b in A[(q, t[-1])])
        if isinstance(e, (Join, Union)):
            blocked: FrozenSet[Row] = frozenset()
            parts = []
            for side in (e.left, e.right):
                try:
                    parts.append(self.rel(side, env, A))
                except _Undecided as exc:
                    blocked |= exc.rows
            if blocked:
                raise _Undecided(blocked)
            if isinstance(e, Union):
                return parts[0] | parts[1]
            index: Dict[Atom, list] = {}
            for t in parts[1]:
                index.setdefault(t[0], []).append(t[1:])
            return frozenset(a[:-1] + b for a in parts[0] for b in index.get(a[-1], ()))
        raise EvalError(f"cannot evaluate {e!r}")

    def num(self, e: Expr, env, A) -> int:
        if isinstance(e, Card):
            return len(self.rel(e.expr, env, A))
        if isinstance(e, IntLit):
            return e.value
        return sum(atom_int_value(t[0]) for t in self.rel(e, env, A))

    def truth(self, f: Formula, env, A, blk: set) -> Optional[bool]:
        try:
            if isinstance(f, Equal):
                return self.rel(f.left, env, A) == self.rel(f.right, env, A)
            if isinstance(f, In):
                return self.rel(f.left, env, A) <= self.rel(f.right, env, A)
            if isinstance(f, IntCompare):
                a, b = self.num(f.left, env, A), self.num(f.right, env, A)
                return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
                        ">": a > b, ">=": a >= b}[f.op]
            if isinstance(f, PredCall):
                bound = {}
                for (pname, _), arg in zip(f.decl.params, f.args):
                    value = self.rel(arg, env, A)
                    if len(value) != 1:
                        raise EvalError(f"argument {pname} of {f.name} must be a single atom")
                    (bound[pname],) = next(iter(value))
                return self.truth(And(f.decl.body), bound, A, blk)
        except _Undecided as exc:
            blk |= exc.rows
            return None
        if isinstance(f, Not):
            v = self.truth(f.body, env, A, blk)
            return None if v is None else not v
        if isinstance(f, Quantified):
            subs = ((f.body, {**env, f.var: a}) for a in self.u.atoms(f.over))
            return self._junction(subs, A, blk, f.kind == "all")
        if isinstance(f, And):
            return self._junction(((p, env) for p in f.parts), A, blk, True)
        if isinstance(f, Or):
            return self._junction(((f.left, env), (f.right, env)), A, blk, False)
        if isinstance(f, Implies):
            return self._junction(((Not(f.left), env), (f.right, env)), A, blk, False)
        raise EvalError(f"cannot evaluate {f!r}")

    def _junction(self, subs, A, blk, conj: bool) -> Optional[bool]:
        # conj: all must hold; otherwise one suffices
        unknown = False
        local: set = set()
        for g, env in subs:
            v = self.truth(g, env, A, local)
            if v is None:
                unknown = True
            elif v != conj:
                return v
        if unknown:
            blk |= local
            return None
        return conj

    def eval(self, c, A) -> Tuple[Optional[bool], set]:
        blk: set = set()
        return self.truth(c[0], c[1], A, blk), blk

    # search -------------------------------------------------------------------

    def propagate(self, A, D, pending):
        """Prune and fix rows until nothing changes; None on conflict."""
        while True:
            changed = False
            still = []
            for c in pending:
                val, blk = self.eval(c, A)
                if val is True:
                    continue
                if val is False:
                    return None
                if len(blk) == 1:
                    (row,) = blk
                    keep, all_true = [], True
                    for v in D[row]:
                        A[row] = v
                        tv, _ = self.eval(c, A)
                        if tv is not False:
                            keep.append(v)
                        if tv is not True:
                            all_true = False
                    del A[row]
                    if not keep:
                        return None
                    if len(keep) == 1:
                        A[row] = keep[0]
                        del D[row]
                        changed = True
                    elif len(keep) < len(D[row]):
                        D[row] = tuple(keep)
                        changed = True
                    if all_true:
                        continue
                still.append((c, blk))
            pending = [c for c, _ in still]
            if not changed:
                return still

    def search(self, A, D, pending) -> Optional[Dict[Row, FrozenSet[Atom]]]:
        self.nodes += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise FinderTimeout("search exceeded its time budget")
        state = self.propagate(A, D, pending)
        if state is None:
            return None
        if not state:
            for r in self.rows:
                if r not in A:
                    A[r] = D[r][0]
            return A
        best = min(
            (r for _, blk in state for r in blk if r in D),
            key=lambda r: (len(D[r]), self.index[r]),
        )
        pending = [c for c, _ in state]
        for v in D[best]:
            A2, D2 = dict(A), dict(D)
            A2[best] = v
            del D2[best]
            found = self.search(A2, D2, pending)
            if found is not None:
                return found
        return None

    def run(self) -> Optional[Instance]:
        if any(not d for d in self.domains.values()):
            return None
        found = self.search({}, dict(self.domains), list(self.constraints))
        if found is None:
            return None
        rels = {
            q: frozenset((owner, t) for (_, owner) in rows for t in found[(q, owner)])
            for q, rows in self.owner_rows.items()
        }
        return Instance(self.u, rels)


def _goal_parts(problem: SearchProblem) -> List[Formula]:
    """Top-level conjuncts minus those the row domains already enforce."""
    enforced = set(problem.typed.multiplicity_constraints)
    parts: List[Formula] = []

    def flat(f):
        if isinstance(f, And):
            for p in f.parts:
                flat(p)
        elif f not in enforced:
            parts.append(f)

    flat(problem.goal)
    return parts


def solve(problem: SearchProblem, timeout: Optional[float] = None) -> Optional[Instance]:
    """First satisfying instance in shape order, or None if there is none within bounds.

    ``timeout`` is in seconds of wall-clock time; running out raises
    :class:`FinderTimeout`, which is never reported as unsatisfiable.
    """
    deadline = None if timeout is None else time.monotonic() + timeout
    typed = problem.typed
    parts = _goal_parts(problem)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10000))
    try:
        for shape in universe_shapes(typed, problem.bounds):
            universe = build_universe(typed, problem.bounds, shape)
            search = _ShapeSearch(typed, universe, parts, deadline)
            inst = search.run()
            log.debug("shape %s: %d nodes, %s", shape.fresh, search.nodes,
                      "sat" if inst else "unsat")
            if inst is not None:
                return inst
        return None
    finally:
        sys.setrecursionlimit(limit)


# -- commands -------------------------------------------------------------------


def check_assertion(typed: TypedSpec, assert_name: str, scope: Optional[int] = None,
                    timeout: Optional[float] = None) -> CheckResult:
    decl = typed.asserts.get(assert_name)
    if decl is None:
        raise UnknownAssert(f"unknown assertion {assert_name}")
    bounds = build_bounds(typed, scope)
    body = And(decl.body)
    inst = solve(facts_problem(typed, bounds, [Not(body)]), timeout)
    if inst is None:
        return CheckResult("valid", bounds)
    return CheckResult("counterexample", bounds, inst, witness(inst, body))


def _run_goal(typed: TypedSpec, target: U[str, Sequence[Formula]]) -> Formula:
    if isinstance(target, str):
        pred = typed.preds.get(target)
        if pred is None:
            raise UnknownPred(f"unknown predicate {target}")
        body: Formula = And(pred.body)
        for pname, ptype in reversed(pred.params):
            body = Quantified("some", pname, ptype, body)
        return body
    return And(tuple(target))


def run_command(typed: TypedSpec, target: U[str, Sequence[Formula]], scope: Optional[int] = None,
                timeout: Optional[float] = None) -> Optional[Instance]:
    """Find an instance of the facts plus a predicate (or inline block).

    Predicate parameters are existentially quantified over their types.
    """
    bounds = build_bounds(typed, scope)
    return solve(facts_problem(typed, bounds, [_run_goal(typed, target)]), timeout)


def run_bindings(typed: TypedSpec, inst: Instance, pred_name: str) -> Dict[str, Atom]:
    """First parameter assignment (in universe order) under which the predicate holds."""
    pred = typed.preds[pred_name]
    domains = [inst.universe.atoms(t) for _, t in pred.params]
    for combo in itertools.product(*domains):
        env = {p: a for (p, _), a in zip(pred.params, combo)}
        if eval_formula(inst, env, And(pred.body)):
            return env
    return {}
