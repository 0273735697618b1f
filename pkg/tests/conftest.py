import pytest

from relspec import CORPUS_DIR
from relspec.analyzer import analyze
from relspec.parser import parse_text

CORPUS_FILES = ("metamodel.spec", "cresto.spec", "properties.spec")


def load_corpus(*names):
    spec = None
    for name in names or CORPUS_FILES:
        part = parse_text((CORPUS_DIR / name).read_text(), name)
        spec = part if spec is None else spec + part
    return spec


@pytest.fixture(scope="session")
def corpus_typed():
    return analyze(load_corpus())


@pytest.fixture(scope="session")
def metamodel_typed():
    return analyze(load_corpus("metamodel.spec"))


def typed_of(text):
    return analyze(parse_text(text))


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
