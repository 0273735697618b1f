"""Recursive-descent parser producing a :class:`~relspec.model.Spec`.

Precedence, tightest first: ``.``, prefix ``#``, ``+``, comparisons,
``not``, ``and``, ``or``, ``=>``.  A quantifier body runs to the end of
the enclosing formula.  Inside ``{ }`` blocks consecutive formulas are
separate conjuncts.
"""

from __future__ import annotations

from typing import FrozenSet, List, Optional, Sequence, Tuple

from .errors import Loc, ParseError
from .lexer import Token, tokenize
from .model import (
    MULTIPLICITIES, And, AssertDecl, Card, Command, Equal, Expr, FactDecl, FieldDecl,
    Formula, Implies, In, IntCompare, IntLit, Join, Name, Not, Or, PredCall, PredDecl,
    Quantified, SigDecl, Spec, StringLit, Union, VarRef,
)

_CMP = ("=", "!=", "<", "<=", ">", ">=")
_EXPR_CONTINUATION = ("=", "!=", "<", "<=", ">", ">=", ".", "+", "in")


class Parser:
    def __init__(self, tokens: Sequence[Token], filename: Optional[str] = None):
        self.toks = list(tokens)
        if not self.toks or self.toks[-1].kind != "eof":
            last = self.toks[-1] if self.toks else None
            self.toks.append(Token("eof", "", last.line if last else 1, last.col if last else 1))
        self.pos = 0
        self.filename = filename

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def loc(self, tok: Optional[Token] = None) -> Loc:
        tok = tok or self.tok
        return Loc(tok.line, tok.col, self.filename)

    def error(self, expected: Sequence[str]) -> ParseError:
        found = "end of input" if self.tok.kind == "eof" else repr(self.tok.lexeme)
        want = " or ".join(expected)
        return ParseError(f"expected {want}, found {found}", self.loc(), expected)

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, *lexemes: str) -> Optional[Token]:
        if self.tok.is_(*lexemes):
            return self.advance()
        return None

    def expect(self, *lexemes: str) -> Token:
        if self.tok.is_(*lexemes):
            return self.advance()
        raise self.error([repr(x) for x in lexemes])

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error(["identifier"])
        return self.advance().lexeme

    # -- paragraphs -------------------------------------------------------

    def parse_spec(self) -> Spec:
        sigs: List[SigDecl] = []
        facts: List[FactDecl] = []
        preds: List[PredDecl] = []
        asserts: List[AssertDecl] = []
        commands: List[Command] = []
        while self.tok.kind != "eof":
            if self.tok.is_("abstract", "one", "sig"):
                sigs.extend(self.sig_decl())
            elif self.tok.is_("fact"):
                facts.append(self.fact_decl())
            elif self.tok.is_("pred"):
                preds.append(self.pred_decl())
            elif self.tok.is_("assert"):
                asserts.append(self.assert_decl())
            elif self.tok.is_("check", "run"):
                commands.append(self.command())
            else:
                raise self.error(["'sig'", "'fact'", "'pred'", "'assert'", "'check'", "'run'"])
        return Spec(tuple(sigs), tuple(facts), tuple(preds), tuple(asserts), tuple(commands))

    def sig_decl(self) -> List[SigDecl]:
        start = self.loc()
        is_abstract = bool(self.accept("abstract"))
        is_one = bool(self.accept("one"))
        self.expect("sig")
        names = [(self.loc(), self.ident())]
        while self.accept(","):
            names.append((self.loc(), self.ident()))
        parent = self.ident() if self.accept("extends") else None
        self.expect("{")
        fields: List[FieldDecl] = []
        while not self.tok.is_("}"):
            floc = self.loc()
            fname = self.ident()
            self.expect(":")
            if not self.tok.is_(*MULTIPLICITIES):
                raise self.error([repr(m) for m in MULTIPLICITIES])
            mult = self.advance().lexeme
            fields.append(FieldDecl(fname, mult, self.ident(), loc=floc))
            if not self.accept(","):
                break
        self.expect("}")
        appended: Tuple[Formula, ...] = ()
        if self.tok.is_("{"):
            appended = self.block(frozenset({"this"}))
        return [
            SigDecl(name, is_abstract, is_one, parent, tuple(fields), appended,
                    loc=start if i == 0 else nloc)
            for i, (nloc, name) in enumerate(names)
        ]

    def fact_decl(self) -> FactDecl:
        start = self.loc()
        self.expect("fact")
        name = self.ident() if self.tok.kind == "ident" else None
        return FactDecl(name, self.block(frozenset()), loc=start)

    def pred_decl(self) -> PredDecl:
        start = self.loc()
        self.expect("pred")
        name = self.ident()
        self.expect("[")
        params: List[Tuple[str, str]] = []
        while not self.tok.is_("]"):
            pname = self.ident()
            self.expect(":")
            params.append((pname, self.ident()))
            if not self.accept(","):
                break
        self.expect("]")
        body = self.block(frozenset(p for p, _ in params))
        return PredDecl(name, tuple(params), body, loc=start)

    def assert_decl(self) -> AssertDecl:
        start = self.loc()
        self.expect("assert")
        name = self.ident()
        return AssertDecl(name, self.block(frozenset()), loc=start)

    def command(self) -> Command:
        start = self.loc()
        kind = self.advance().lexeme
        target = block = None
        if kind == "run" and self.tok.is_("{"):
            block = self.block(frozenset())
        else:
            target = self.ident()
        scope = None
        if self.accept("for"):
            if self.tok.kind != "int":
                raise self.error(["integer"])
            tok = self.advance()
            scope = tok.value
            if scope < 1:
                raise ParseError("scope must be a positive integer", self.loc(tok), ["integer"])
        return Command(kind, target, block, scope, loc=start)

    def block(self, bound: FrozenSet[str]) -> Tuple[Formula, ...]:
        self.expect("{")
        out = []
        while not self.tok.is_("}"):
            if self.tok.kind == "eof":
                raise self.error(["'}'"])
            out.append(self.formula(bound))
        self.expect("}")
        return tuple(out)

    # -- formulas ---------------------------------------------------------

    def formula(self, bound: FrozenSet[str]) -> Formula:
        left = self.or_formula(bound)
        if self.accept("=>"):
            return Implies(left, self.formula(bound))
        return left

    def or_formula(self, bound) -> Formula:
        left = self.and_formula(bound)
        while self.accept("or"):
            left = Or(left, self.and_formula(bound))
        return left

    def and_formula(self, bound) -> Formula:
        parts = [self.unary(bound)]
        while self.accept("and"):
            parts.append(self.unary(bound))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self, bound) -> Formula:
        if self.accept("not"):
            return Not(self.unary(bound))
        if self.tok.is_("all") or (self.tok.is_("some") and self._quantifier_ahead()):
            return self.quantified(bound)
        return self.atomic(bound)

    def _quantifier_ahead(self) -> bool:
        return self.peek().kind == "ident" and self.peek(2).is_(":", ",")

    def quantified(self, bound) -> Formula:
        kind = self.advance().lexeme
        names = [self._binder()]
        while self.accept(","):
            names.append(self._binder())
        self.expect(":")
        over = self.ident()
        self.expect("|")
        body = self.formula(bound | frozenset(names))
        for name in reversed(names):
            body = Quantified(kind, name, over, body)
        return body

    def _binder(self) -> str:
        tok = self.tok
        name = self.ident()
        if name == "this":
            raise ParseError("'this' cannot be bound by a quantifier", self.loc(tok), ["identifier"])
        return name

    def atomic(self, bound) -> Formula:
        tok = self.tok
        if tok.kind == "ident" and self.peek().is_("["):
            return self.pred_call(bound)
        if tok.is_("some", "one", "lone"):
            self.advance()
            e = self.expr(bound)
            op = {"some": ">=", "one": "=", "lone": "<="}[tok.lexeme]
            return IntCompare(op, Card(e), IntLit(1))
        if tok.is_("("):
            save = self.pos
            try:
                self.advance()
                f = self.formula(bound)
                self.expect(")")
                if not (self.tok.is_(*_EXPR_CONTINUATION)
                        or (self.tok.is_("not") and self.peek().is_("in"))):
                    return f
            except ParseError:
                pass
            self.pos = save
        return self.comparison(bound)

    def pred_call(self, bound) -> Formula:
        start = self.loc()
        name = self.ident()
        self.expect("[")
        args = []
        while not self.tok.is_("]"):
            args.append(self.expr(bound))
            if not self.accept(","):
                break
        self.expect("]")
        return PredCall(name, tuple(args), loc=start)

    def comparison(self, bound) -> Formula:
        left = self.expr(bound)
        if self.accept("in"):
            return In(left, self.expr(bound))
        if self.tok.is_("not") and self.peek().is_("in"):
            self.advance()
            self.advance()
            return Not(In(left, self.expr(bound)))
        if not self.tok.is_(*_CMP):
            raise self.error(["comparison operator", "'in'"])
        op = self.advance().lexeme
        right = self.expr(bound)
        ints = isinstance(left, Card) or isinstance(right, Card)
        if op == "=" and not ints:
            return Equal(left, right)
        if op == "!=" and not ints:
            return Not(Equal(left, right))
        return IntCompare(op, left, right)

    # -- expressions ------------------------------------------------------

    def expr(self, bound) -> Expr:
        left = self.card(bound)
        while self.accept("+"):
            left = Union(left, self.card(bound))
        return left

    def card(self, bound) -> Expr:
        if self.accept("#"):
            return Card(self.card(bound))
        return self.join(bound)

    def join(self, bound) -> Expr:
        left = self.primary(bound)
        while self.accept("."):
            left = Join(left, self.primary(bound))
        return left

    def primary(self, bound) -> Expr:
        tok = self.tok
        if tok.kind == "ident":
            self.advance()
            if tok.lexeme in bound:
                return VarRef(tok.lexeme)
            return Name(tok.lexeme, loc=self.loc(tok))
        if tok.kind == "string":
            self.advance()
            return StringLit(tok.value)
        if tok.kind == "int":
            self.advance()
            return IntLit(tok.value)
        if self.accept("("):
            e = self.expr(bound)
            self.expect(")")
            return e
        raise self.error(["expression"])


def parse(tokens: Sequence[Token], filename: Optional[str] = None) -> Spec:
    return Parser(tokens, filename).parse_spec()


def parse_text(source: str, filename: Optional[str] = None) -> Spec:
    return parse(tokenize(source, filename), filename)


def parse_formula(source: str, bound: Sequence[str] = ()) -> Formula:
    """Parse a single formula; handy for tests and the ``--inline`` flag."""
    p = Parser(tokenize(source))
    f = p.formula(frozenset(bound))
    if p.tok.kind != "eof":
        raise p.error(["end of input"])
    return f
