"""relspec: a small relational specification language with a bounded model finder."""

from pathlib import Path

from .analyzer import TypedSpec, analyze, dump_typed
from .errors import RelspecError
from .evaluator import eval_formula, verify_instance, witness
from .finder import (
    build_bounds, check_assertion, count_instances, enumerate_instances, facts_problem,
    run_command, solve,
)
from .lexer import tokenize
from .model import Instance, Spec, structural_check
from .parser import parse, parse_text
from .printer import emit_spec_text
from .uml import load_class_model, translate

__version__ = "0.1.0"

CORPUS_DIR = Path(__file__).parent / "corpus"

__all__ = [
    "CORPUS_DIR", "Instance", "RelspecError", "Spec", "TypedSpec", "analyze", "build_bounds",
    "check_assertion", "count_instances", "dump_typed", "emit_spec_text", "enumerate_instances",
    "eval_formula", "facts_problem", "load_class_model", "parse", "parse_text", "run_command",
    "solve", "structural_check", "tokenize", "translate", "verify_instance", "witness",
]
