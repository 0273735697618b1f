import pytest
from hypothesis import given, strategies as st

from relspec.errors import LexError
from relspec.lexer import KEYWORDS, PUNCTUATION, detokenize, tokenize


def kinds(src):
    return [(t.kind, t.lexeme) for t in tokenize(src)]


def test_basic_stream():
    assert kinds('sig A { f: one String } // trailing') == [
        ("keyword", "sig"), ("ident", "A"), ("punct", "{"), ("ident", "f"), ("punct", ":"),
        ("keyword", "one"), ("ident", "String"), ("punct", "}"), ("eof", ""),
    ]


def test_longest_punctuation_wins():
    assert [t.lexeme for t in tokenize("a=>b>=c!=d<=e=f")][:-1] == \
        ["a", "=>", "b", ">=", "c", "!=", "d", "<=", "e", "=", "f"]


def test_positions_are_one_based():
    toks = tokenize("sig A {}\n  fact {}")
    assert (toks[0].line, toks[0].col) == (1, 1)
    fact = toks[4]
    assert fact.lexeme == "fact" and (fact.line, fact.col) == (2, 3)


def test_string_and_int_values():
    s, n, _ = tokenize('"Juice Factory" 42')
    assert s.kind == "string" and s.value == "Juice Factory" and s.lexeme == '"Juice Factory"'
    assert n.kind == "int" and n.value == 42


def test_identifiers_may_carry_primes():
    assert kinds("x' y_2")[:2] == [("ident", "x'"), ("ident", "y_2")]


def test_comment_only_source_is_just_eof():
    assert kinds("// nothing here\n// or here") == [("eof", "")]


@pytest.mark.parametrize("src,line,col", [
    ('sig A { f: one String }\n"open', 2, 1),
    ("sig A $", 1, 7),
    ('"no newline\nallowed"', 1, 1),
])
def test_lex_errors_carry_position(src, line, col):
    with pytest.raises(LexError) as info:
        tokenize(src, "x.spec")
    assert (info.value.loc.line, info.value.loc.col) == (line, col)
    assert info.value.diagnostic().startswith(f"x.spec:{line}:{col}: error:")


ident = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True).filter(lambda s: s not in KEYWORDS)
lexeme = st.one_of(
    ident,
    st.sampled_from(sorted(KEYWORDS)),
    st.sampled_from(PUNCTUATION),
    st.integers(0, 999).map(str),
    st.from_regex(r'"[a-z ]{0,5}"', fullmatch=True),
)
sep = st.sampled_from([" ", "  ", "\n", " \n\t", " // note\n"])


@given(st.lists(st.tuples(lexeme, sep), max_size=25))
def test_detokenize_round_trip(pairs):
    src = "".join(a + b for a, b in pairs)
    toks = tokenize(src)
    assert [t.lexeme for t in toks[:-1]] == [a for a, _ in pairs]
    again = tokenize(detokenize(toks))
    assert [(t.kind, t.lexeme, t.line, t.col) for t in again[:-1]] == \
        [(t.kind, t.lexeme, t.line, t.col) for t in toks[:-1]]
