"""Canonical text form of specs, formulas and expressions.

The output re-parses to a structurally equal value; parentheses are added
only where precedence or an open-ended quantifier body demands them.
"""

from __future__ import annotations

from typing import Iterable, List, Tuple

from .model import (
    And, AssertDecl, Card, Command, Equal, Expr, FactDecl, FieldRef, Formula, Implies,
    In, IntCompare, IntLit, Join, Name, Not, Or, PredCall, PredDecl, Quantified,
    SigDecl, SigRef, Spec, StringLit, Union, VarRef,
)

INDENT = "\t"


def format_expr(e: Expr) -> str:
    return _expr(e)[0]


def _expr(e: Expr) -> Tuple[str, int]:
    if isinstance(e, (Name, VarRef, SigRef)):
        return e.name, 4
    if isinstance(e, FieldRef):
        return e.field_name, 4
    if isinstance(e, StringLit):
        return f'"{e.text}"', 4
    if isinstance(e, IntLit):
        return str(e.value), 4
    if isinstance(e, Join):
        return f"{_wrap_expr(e.left, 3)}.{_wrap_expr(e.right, 4)}", 3
    if isinstance(e, Card):
        return f"#{_wrap_expr(e.expr, 2)}", 2
    if isinstance(e, Union):
        return f"{_wrap_expr(e.left, 1)} + {_wrap_expr(e.right, 2)}", 1
    raise TypeError(f"not an expression: {e!r}")


def _wrap_expr(e: Expr, min_level: int) -> str:
    text, level = _expr(e)
    return text if level >= min_level else f"({text})"


def format_formula(f: Formula) -> str:
    return _formula(f)[0]


# levels: 0 quantifier, 1 =>, 2 or, 3 and, 4 not, 5 atomic
def _formula(f: Formula) -> Tuple[str, int, bool]:
    if isinstance(f, Equal):
        return f"{format_expr(f.left)} = {format_expr(f.right)}", 5, False
    if isinstance(f, In):
        return f"{format_expr(f.left)} in {format_expr(f.right)}", 5, False
    if isinstance(f, IntCompare):
        return f"{format_expr(f.left)} {f.op} {format_expr(f.right)}", 5, False
    if isinstance(f, PredCall):
        return f"{f.name}[{', '.join(format_expr(a) for a in f.args)}]", 5, False
    if isinstance(f, Quantified):
        body, _, _ = _formula(f.body)
        return f"{f.kind} {f.var}: {f.over} | {body}", 0, True
    if isinstance(f, Not):
        text, level, is_open = _formula(f.body)
        if level in (1, 2, 3):
            return f"not ({text})", 4, False
        return f"not {text}", 4, is_open
    if isinstance(f, And):
        out: List[str] = []
        is_open = False
        for i, part in enumerate(f.parts):
            text, level, is_open = _formula(part)
            last = i == len(f.parts) - 1
            if level in (1, 2, 3) or (is_open and not last):
                text, is_open = f"({text})", False
            out.append(text)
        return " and ".join(out), 3, is_open
    if isinstance(f, Or):
        lt, ll, lo = _formula(f.left)
        if ll == 1 or lo:
            lt = f"({lt})"
        rt, rl, ro = _formula(f.right)
        if rl in (1, 2):
            rt, ro = f"({rt})", False
        return f"{lt} or {rt}", 2, ro
    if isinstance(f, Implies):
        lt, ll, lo = _formula(f.left)
        if ll == 1 or lo:
            lt = f"({lt})"
        rt, _, ro = _formula(f.right)
        return f"{lt} => {rt}", 1, ro
    raise TypeError(f"not a formula: {f!r}")


def _block(body: Iterable[Formula], depth: int = 1) -> List[str]:
    return [INDENT * depth + format_formula(f) for f in body]


def format_sig(sig: SigDecl) -> str:
    head = ""
    if sig.is_abstract:
        head += "abstract "
    if sig.is_one:
        head += "one "
    head += f"sig {sig.name}"
    if sig.parent:
        head += f" extends {sig.parent}"
    if sig.fields:
        fields = [f"{INDENT}{fd.name}: {fd.mult} {fd.target}" for fd in sig.fields]
        text = head + " {\n" + ",\n".join(fields) + "\n}"
    else:
        text = head + " {}"
    if sig.appended_facts:
        text += " {\n" + "\n".join(_block(sig.appended_facts)) + "\n}"
    return text


def _format_paragraph(p) -> str:
    if isinstance(p, SigDecl):
        return format_sig(p)
    if isinstance(p, FactDecl):
        return _braced(f"fact {p.name}" if p.name else "fact", p.body)
    if isinstance(p, PredDecl):
        params = ", ".join(f"{n}: {t}" for n, t in p.params)
        return _braced(f"pred {p.name}[{params}]", p.body)
    if isinstance(p, AssertDecl):
        return _braced(f"assert {p.name}", p.body)
    if isinstance(p, Command):
        text = f"{p.kind} {p.target}" if p.block is None else _braced(p.kind, p.block)
        if p.scope is not None:
            text += f" for {p.scope}"
        return text
    raise TypeError(f"not a paragraph: {p!r}")


def _braced(head: str, body) -> str:
    if not body:
        return head + " {}"
    return head + " {\n" + "\n".join(_block(body)) + "\n}"


def emit_spec_text(spec: Spec) -> str:
    """Pretty-print a spec: signatures, facts, predicates, assertions, commands."""
    paragraphs = [*spec.sigs, *spec.facts, *spec.preds, *spec.asserts, *spec.commands]
    return "\n\n".join(_format_paragraph(p) for p in paragraphs) + "\n"
