"""Class-model import and translation to the specification language.

The input is a JSON document::

    {"classes": [{"name": "Region", "abstract": false, "parent": null,
                  "attributes": [{"name": "label", "type": "String", "multiplicity": "1"}]}],
     "associations": [{"name": "lines", "source": "Region", "target": "Segment",
                       "multiplicity": "3..*"}]}

Classes become signatures, attributes become ``one Int``/``one String``
fields and associations become fields on their source class.  Association
multiplicities map to ``lone``/``one``/``some``/``set``; other ranges become
a ``set`` field plus cardinality bounds in an appended block.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import ResolveError, SchemaError, UnsupportedFeature
from .lexer import KEYWORDS
from .model import BUILTINS, Card, FieldDecl, Formula, IntCompare, IntLit, Name, SigDecl, Spec
from .printer import emit_spec_text

__all__ = [
    "Association", "Attribute", "ClassModel", "TranslationReport", "UmlClass", "emit_spec_text",
    "load_class_model", "parse_multiplicity", "translate", "translate_with_report",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_MULT = re.compile(r"(\d+|\*)(?:\.\.(\d+|\*))?\Z")
ASSOCIATION_KINDS = ("association", "aggregation", "composition")


@dataclass(frozen=True)
class Attribute:
    name: str
    type: str
    multiplicity: str = "1"


@dataclass(frozen=True)
class UmlClass:
    name: str
    is_abstract: bool = False
    parent: Optional[str] = None
    attributes: Tuple[Attribute, ...] = ()


@dataclass(frozen=True)
class Association:
    name: str
    source: str
    target: str
    multiplicity: str
    kind: str = "association"

    @property
    def bounds(self) -> Tuple[int, Optional[int]]:
        return parse_multiplicity(self.multiplicity)


@dataclass(frozen=True)
class ClassModel:
    classes: Tuple[UmlClass, ...]
    associations: Tuple[Association, ...] = ()


@dataclass
class TranslationReport:
    sigs: int = 0
    fields: int = 0
    appended_facts: int = 0
    warnings: List[str] = field(default_factory=list)


def parse_multiplicity(text: str, path: str = "multiplicity") -> Tuple[int, Optional[int]]:
    """``"L..U"`` to ``(L, U)``; ``U`` is None for ``*``.  ``"n"`` means n..n."""
    m = _MULT.match(text.strip()) if isinstance(text, str) else None
    if not m:
        raise SchemaError(f"{path}: bad multiplicity {text!r}")
    lo_s, hi_s = m.group(1), m.group(2)
    if hi_s is None:
        if lo_s == "*":
            return 0, None
        return int(lo_s), int(lo_s)
    if lo_s == "*":
        raise SchemaError(f"{path}: lower bound cannot be '*' in {text!r}")
    lo, hi = int(lo_s), None if hi_s == "*" else int(hi_s)
    if hi is not None and lo > hi:
        raise SchemaError(f"{path}: lower bound exceeds upper bound in {text!r}")
    return lo, hi


def _get(obj, key, path, kind, default=...):
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected an object")
    if key not in obj:
        if default is ...:
            raise SchemaError(f"{path}.{key}: missing key")
        return default
    value = obj[key]
    if value is None and default is None:
        return None
    if not isinstance(value, kind):
        raise SchemaError(f"{path}.{key}: expected {kind.__name__ if isinstance(kind, type) else 'value'}")
    return value


def _ident(value: str, path: str) -> str:
    if not _IDENT.match(value) or value in KEYWORDS:
        raise SchemaError(f"{path}: {value!r} is not a usable identifier")
    return value


def load_class_model(source: str) -> ClassModel:
    """Parse and validate a class-model JSON document."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"$: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    classes_raw = _get(doc, "classes", "$", list)
    assocs_raw = _get(doc, "associations", "$", list)
    if not classes_raw:
        raise SchemaError("$.classes: no classes to translate")

    classes = []
    for i, c in enumerate(classes_raw):
        path = f"$.classes[{i}]"
        name = _ident(_get(c, "name", path, str), f"{path}.name")
        attrs = []
        for j, a in enumerate(_get(c, "attributes", path, list, [])):
            apath = f"{path}.attributes[{j}]"
            mult = _get(a, "multiplicity", apath, str)
            parse_multiplicity(mult, f"{apath}.multiplicity")
            attrs.append(Attribute(
                _ident(_get(a, "name", apath, str), f"{apath}.name"),
                _get(a, "type", apath, str),
                mult,
            ))
        parent = _get(c, "parent", path, str, None)
        classes.append(UmlClass(name, _get(c, "abstract", path, bool, False), parent, tuple(attrs)))

    names = [c.name for c in classes]
    for i, c in enumerate(classes):
        if names.count(c.name) > 1:
            raise SchemaError(f"$.classes[{i}].name: duplicate class {c.name}")
        if c.parent is not None and c.parent not in names:
            raise ResolveError(f"$.classes[{i}].parent: unknown class {c.parent}")

    assocs = []
    for i, a in enumerate(assocs_raw):
        path = f"$.associations[{i}]"
        assoc = Association(
            _ident(_get(a, "name", path, str), f"{path}.name"),
            _get(a, "source", path, str),
            _get(a, "target", path, str),
            _get(a, "multiplicity", path, str),
            _get(a, "kind", path, str, "association"),
        )
        parse_multiplicity(assoc.multiplicity, f"{path}.multiplicity")
        for end in ("source", "target"):
            if getattr(assoc, end) not in names:
                raise ResolveError(f"{path}.{end}: unknown class {getattr(assoc, end)}")
        if assoc.kind not in ASSOCIATION_KINDS:
            raise SchemaError(f"{path}.kind: unknown relationship kind {assoc.kind!r}")
        assocs.append(assoc)
    return ClassModel(tuple(classes), tuple(assocs))


def _bounds_facts(field_name: str, lo: int, hi: Optional[int]) -> List[Formula]:
    card = Card(Name(field_name))
    out: List[Formula] = [IntCompare(">=", card, IntLit(lo))]
    if hi is not None:
        out.append(IntCompare("<=", card, IntLit(hi)))
    return out


def association_field(assoc: Association) -> Tuple[str, List[Formula]]:
    """Multiplicity keyword for an association plus any appended bounds."""
    lo, hi = assoc.bounds
    simple = {(0, 1): "lone", (1, 1): "one", (1, None): "some", (0, None): "set"}
    if (lo, hi) in simple:
        return simple[(lo, hi)], []
    return "set", _bounds_facts(assoc.name, lo, hi)


def translate_with_report(model: ClassModel) -> Tuple[Spec, TranslationReport]:
    report = TranslationReport()
    sigs = []
    for c in model.classes:
        fields: List[FieldDecl] = []
        appended: List[Formula] = []
        for a in c.attributes:
            if a.type not in BUILTINS:
                raise UnsupportedFeature(
                    f"attribute {c.name}.{a.name} has type {a.type}; only Int and String are supported")
            if parse_multiplicity(a.multiplicity) != (1, 1):
                raise UnsupportedFeature(
                    f"attribute {c.name}.{a.name} has multiplicity {a.multiplicity}; only 1 is supported")
            fields.append(FieldDecl(a.name, "one", a.type))
        for assoc in model.associations:
            if assoc.source != c.name:
                continue
            mult, facts = association_field(assoc)
            if assoc.kind != "association":
                report.warnings.append(
                    f"{assoc.kind} {c.name}.{assoc.name} translated as a plain field")
            fields.append(FieldDecl(assoc.name, mult, assoc.target))
            appended.extend(facts)
        names = [f.name for f in fields]
        for n in names:
            if names.count(n) > 1:
                raise SchemaError(f"class {c.name} declares member {n} more than once")
        sigs.append(SigDecl(c.name, c.is_abstract, False, c.parent, tuple(fields), tuple(appended)))
        report.sigs += 1
        report.fields += len(fields)
        report.appended_facts += len(appended)
    return Spec(sigs=tuple(sigs)), report


def translate(model: ClassModel) -> Spec:
    return translate_with_report(model)[0]
