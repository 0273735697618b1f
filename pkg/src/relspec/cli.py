"""The ``relspec`` command-line tool.

Exit codes: 0 valid / instance found, 3 counterexample / no instance,
2 parse, analysis or schema error, 1 usage or I/O error, 4 timeout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .analyzer import TypedSpec, analyze, dump_typed
from .errors import BoundsError, FinderTimeout, Loc, ParseError, RelspecError, UnknownAssert, UnknownPred
from .finder import build_bounds, check_assertion, run_bindings, run_command
from .model import Command, Instance, Spec
from .parser import parse_text
from .printer import emit_spec_text
from .uml import load_class_model, translate_with_report

EXIT_OK, EXIT_USAGE, EXIT_ERROR, EXIT_NEGATIVE, EXIT_TIMEOUT = 0, 1, 2, 3, 4
INLINE_FILE = "<inline>"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; usage errors are 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


@dataclasses.dataclass
class RunRecord:
    command: str
    files: List[str]
    verdict: str
    target: Optional[str] = None
    bounds: Optional[dict] = None
    witness: Optional[dict] = None
    instance: Optional[Instance] = None
    elapsed_ms: Optional[int] = None

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "command": self.command, "files": self.files}
        if self.command == "check":
            out["assert"] = self.target
        else:
            out["target"] = self.target
        if self.bounds is not None:
            out["bounds"] = self.bounds
        if self.witness is not None:
            out["witness"] = self.witness
        if self.instance is not None:
            out["instance"] = self.instance.to_json()
        if self.elapsed_ms is not None:
            out["elapsedMs"] = self.elapsed_ms
        return out


# -- loading ----------------------------------------------------------------------


def _expand(paths: Sequence[str]) -> List[Path]:
    out: List[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(p.glob("*.spec"))
            if not found:
                raise OSError(f"{p}: directory holds no .spec files")
            out.extend(found)
        else:
            out.append(p)
    return out


def load_spec(paths: Sequence[str]) -> Tuple[Spec, List[str]]:
    """Parse and concatenate the given files (directories contribute their *.spec files)."""
    spec = Spec()
    names = []
    for path in _expand(paths):
        text = path.read_text(encoding="utf-8")
        part = parse_text(text, str(path))
        if part.is_empty():
            raise ParseError("empty specification", Loc(1, 1, str(path)), ["sig", "fact", "pred", "assert"])
        spec = spec + part
        names.append(str(path))
    return spec, names


def _scope_for(typed: TypedSpec, kind: str, target: Optional[str], flag: Optional[int]) -> Optional[int]:
    # an explicit `for N` in the files wins over --scope
    for c in typed.commands:
        if c.kind == kind and c.target == target and c.block is None and c.scope is not None:
            return c.scope
    return flag


# -- commands ---------------------------------------------------------------------


def cmd_check(args) -> Tuple[int, RunRecord]:
    spec, files = load_spec(args.files)
    typed = analyze(spec)
    name = args.assert_name
    if name is None:
        checks = [c.target for c in typed.commands if c.kind == "check"]
        if len(checks) != 1:
            listed = ", ".join(checks) or "none"
            raise UsageError(f"--assert is required when the files hold {len(checks)} check commands ({listed})")
        name = checks[0]
    if name not in typed.asserts:
        raise UnknownAssert(f"unknown assertion {name}")
    scope = _scope_for(typed, "check", name, args.scope)
    start = time.monotonic()
    try:
        result = check_assertion(typed, name, scope, args.timeout_ms / 1000)
    except FinderTimeout:
        record = RunRecord("check", files, "timeout", name,
                           build_bounds(typed, scope).to_json())
        return EXIT_TIMEOUT, _timed(record, start, args)
    record = RunRecord("check", files, result.verdict, name, result.bounds.to_json(),
                       result.witness, result.instance)
    code = EXIT_OK if result.is_valid else EXIT_NEGATIVE
    return code, _timed(record, start, args)


def _inline_block(text: str) -> Command:
    cmd = parse_text(f"run {text}", INLINE_FILE)
    if len(cmd.commands) != 1 or cmd.commands[0].block is None or cmd.sigs or cmd.facts:
        raise UsageError("--inline takes a single constraint block such as \"{ some Ecosystem }\"")
    return cmd.commands[0]


def cmd_run(args) -> Tuple[int, RunRecord]:
    spec, files = load_spec(args.files)
    if args.inline is not None and args.pred is not None:
        raise UsageError("--inline and --pred are mutually exclusive")
    inline: Optional[Command] = None
    if args.inline is not None:
        inline = _inline_block(args.inline)
        spec = spec + Spec(commands=(inline,))
    typed = analyze(spec)

    if inline is not None:
        target, label = typed.commands[-1].block, "{inline}"
        scope = args.scope
    else:
        name = args.pred
        if name is None:
            runs = [c for c in typed.commands if c.kind == "run"]
            if len(runs) > 1:
                raise UsageError("several run commands; choose one with --pred or give --inline")
            if runs and runs[0].block is not None:
                cmd = runs[0]
                target, label = cmd.block, "{block}"
                scope = cmd.scope if cmd.scope is not None else args.scope
            elif runs:
                name = runs[0].target
            else:
                target, label, scope = (), "{}", args.scope
        if name is not None:
            if name not in typed.preds:
                raise UnknownPred(f"unknown predicate {name}")
            target, label = name, name
            scope = _scope_for(typed, "run", name, args.scope)

    bounds = build_bounds(typed, scope).to_json()
    start = time.monotonic()
    try:
        inst = run_command(typed, target, scope, args.timeout_ms / 1000)
    except FinderTimeout:
        return EXIT_TIMEOUT, _timed(RunRecord("run", files, "timeout", label, bounds), start, args)
    if inst is None:
        return EXIT_NEGATIVE, _timed(RunRecord("run", files, "none", label, bounds), start, args)
    bindings = run_bindings(typed, inst, target) if isinstance(target, str) else None
    record = RunRecord("run", files, "instance", label, bounds, bindings, inst)
    return EXIT_OK, _timed(record, start, args)


def _timed(record: RunRecord, start: float, args) -> RunRecord:
    if args.timing:
        record.elapsed_ms = int((time.monotonic() - start) * 1000)
    return record


def render_text(record: RunRecord) -> str:
    subject = record.target if record.command == "run" else f"assertion {record.target}"
    scope = record.bounds["defaultScope"] if record.bounds else "?"
    head = {
        "valid": f"No counterexample found for {subject} (scope {scope}); valid within bounds.",
        "counterexample": f"Counterexample found for {subject} (scope {scope}).",
        "instance": f"Instance found for {subject} (scope {scope}).",
        "none": f"No instance found for {subject} (scope {scope}).",
        "timeout": f"Timed out while searching for {subject} (scope {scope}).",
    }[record.verdict]
    lines = [head]
    if record.witness:
        label = "witness" if record.command == "check" else "bindings"
        lines.append(f"{label}: " + ", ".join(f"{k} = {v}" for k, v in record.witness.items()))
    if record.instance is not None:
        data = record.instance.to_json()
        lines.append("sigs:")
        for s, atoms in data["sigs"].items():
            lines.append(f"  {s} = {{{', '.join(atoms)}}}")
        lines.append("fields:")
        for q, pairs in data["fields"].items():
            lines.append(f"  {q} = {{{', '.join('->'.join(p) for p in pairs)}}}")
    if record.elapsed_ms is not None:
        lines.append(f"elapsed: {record.elapsed_ms} ms")
    return "\n".join(lines) + "\n"


def render(record: RunRecord, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record.to_json(), sort_keys=True, indent=2) + "\n"
    return render_text(record)


def dump_ast(node, depth: int = 0) -> str:
    """Indented tree of a parsed spec; source locations and empty child lists are left out."""
    pad = "  " * depth
    if not dataclasses.is_dataclass(node):
        return f"{pad}{node!r}"
    fields = [f for f in dataclasses.fields(node) if f.compare]
    scalars = [f"{f.name}={getattr(node, f.name)!r}" for f in fields if not _is_tree(getattr(node, f.name))]
    lines = [f"{pad}{type(node).__name__}({', '.join(scalars)})"]
    for f in fields:
        value = getattr(node, f.name)
        if _is_tree(value) and value != ():
            lines.append(f"{pad}  {f.name}:")
            lines.extend(dump_ast(item, depth + 2) for item in (value if isinstance(value, tuple) else (value,)))
    return "\n".join(lines)


def _is_tree(value) -> bool:
    if isinstance(value, tuple):
        return value == () or any(dataclasses.is_dataclass(v) for v in value)
    return dataclasses.is_dataclass(value)


def cmd_parse(args) -> Tuple[int, str]:
    spec, files = load_spec(args.files)
    if args.dump_typed:
        return EXIT_OK, dump_typed(analyze(spec)) + "\n"
    if args.dump_ast:
        return EXIT_OK, dump_ast(spec) + "\n"
    analyze(spec)
    counts = (f"{len(spec.sigs)} sigs, {len(spec.facts)} facts, {len(spec.preds)} preds, "
              f"{len(spec.asserts)} asserts, {len(spec.commands)} commands")
    return EXIT_OK, f"ok: {len(files)} files, {counts}\n"


def cmd_translate(args) -> Tuple[int, str]:
    source = Path(args.input).read_text(encoding="utf-8")
    spec, report = translate_with_report(load_class_model(source))
    analyze(spec)  # catch cycles and similar before writing anything
    for w in report.warnings:
        print(f"relspec: warning: {w}", file=sys.stderr)
    return EXIT_OK, emit_spec_text(spec)


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relspec", description="Relational specification checker.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, search=True):
        p.add_argument("files", nargs="+", help="spec files or directories of .spec files")
        p.add_argument("-o", dest="output", metavar="PATH", help="write the report here")
        if search:
            p.add_argument("--scope", type=_positive, help="scope per top-level signature (default 3)")
            p.add_argument("--timeout-ms", type=_positive, default=120_000)
            p.add_argument("--format", choices=("text", "json"), default="text")
            p.add_argument("--timing", action="store_true", help="include elapsed time in the report")

    p = sub.add_parser("check", help="search for a counterexample to an assertion")
    common(p)
    p.add_argument("--assert", dest="assert_name", metavar="NAME")

    p = sub.add_parser("run", help="search for an instance of the facts")
    common(p)
    p.add_argument("--pred", metavar="NAME", help="predicate to satisfy")
    p.add_argument("--inline", metavar="BLOCK", help='extra constraints, e.g. "{ some Ecosystem }"')

    p = sub.add_parser("translate", help="translate a .uml.json class model to spec text")
    p.add_argument("input")
    p.add_argument("-o", dest="output", metavar="PATH")

    p = sub.add_parser("parse", help="parse and analyze spec files")
    common(p, search=False)
    dump = p.add_mutually_exclusive_group()
    dump.add_argument("--dump-ast", action="store_true")
    dump.add_argument("--dump-typed", action="store_true")
    return parser


def _emit(text: str, output: Optional[str]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("check", "run"):
            code, record = (cmd_check if args.command == "check" else cmd_run)(args)
            text = render(record, args.format)
        elif args.command == "parse":
            code, text = cmd_parse(args)
        else:
            code, text = cmd_translate(args)
        _emit(text, args.output)
        return code
    except (UsageError, BoundsError) as exc:
        print(f"relspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RelspecError as exc:
        print(exc.diagnostic() if exc.loc else f"relspec: error: {exc.message}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"relspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
