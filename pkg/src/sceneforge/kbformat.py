"""Reading and writing ``.kb.json`` knowledge-base documents."""

from __future__ import annotations

import io
import json
import os
import warnings
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, BinaryIO, Union

import jsonschema

from sceneforge.kb import (
    Cardinality,
    ClassDef,
    ClassKind,
    CompositionAxiom,
    CompositionMode,
    Diagnostic,
    KnowledgeBase,
    Layer,
    LinkKind,
    MetadataNote,
    ParameterDef,
    ParameterLink,
    PropertyDef,
    PropertyKind,
    Requirement,
    RuleKind,
    errors,
    validate_kb,
)
from sceneforge.rulelang import RuleSyntaxError, format_rule, parse_rule

FORMAT_VERSION = "1.0.0"
SUPPORTED_MAJOR = 1
SECTIONS = ("classes", "properties", "compositions", "parameters", "rules", "maneuvers", "metadata")

_CROSS_REFERENCE_CODES = {"unknown-reference", "inverse-mismatch", "missing-inverse", "inverse-signature"}


class KbLoadError(Exception):
    """The document could not be decoded (syntax, schema, version)."""


class KbSyntaxError(KbLoadError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"syntax error at line {line}, column {column}: {message}")


class KbSchemaError(KbLoadError):
    def __init__(self, message: str, section: str | None = None, index: int | None = None, field: str | None = None):
        self.section = section
        self.index = index
        self.field = field
        where = ".".join(str(p) for p in (section, index, field) if p is not None) or "<document>"
        super().__init__(f"schema violation at {where}: {message}")


class UnsupportedVersionError(KbLoadError):
    pass


class KbValidationError(Exception):
    """The document decoded but the knowledge base breaks a model invariant."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


class CrossReferenceError(KbValidationError):
    pass


class UnknownFieldWarning(UserWarning):
    pass


@lru_cache(maxsize=None)
def kb_schema() -> dict:
    return json.loads(resources.files("sceneforge.data").joinpath("kb.schema.json").read_text("utf-8"))


def sample_kb_path() -> Path:
    return Path(str(resources.files("sceneforge.data").joinpath("german_motorway.kb.json")))


# loading ---------------------------------------------------------------


def load_kb(source: Union[str, os.PathLike, bytes, BinaryIO], mode: str = "strict") -> KnowledgeBase:
    """Load a KB from a path, raw bytes or a binary stream.

    ``mode="lenient"`` turns unknown record fields into warnings instead of
    schema errors.  Every other problem raises.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', not {mode!r}")
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        raw = Path(source).read_bytes()
    else:
        raw = source.read()
    return loads_kb(raw, mode=mode)


def loads_kb(raw: Union[bytes, str], mode: str = "strict") -> KnowledgeBase:
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KbSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    kb = document_to_kb(doc, mode=mode)
    diags = errors(validate_kb(kb))
    if diags:
        if any(d.code in _CROSS_REFERENCE_CODES for d in diags):
            raise CrossReferenceError(diags)
        raise KbValidationError(diags)
    return kb


def _check_version(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise KbSchemaError("top level must be an object")
    version = doc.get("format_version")
    if not isinstance(version, str):
        raise KbSchemaError("missing or non-string format_version", field="format_version")
    major = version.split(".", 1)[0]
    if not major.isdigit() or int(major) != SUPPORTED_MAJOR:
        raise UnsupportedVersionError(f"unsupported format_version {version!r}; supported: {SUPPORTED_MAJOR}.x")


def _resolve(node: dict) -> dict:
    ref = node.get("$ref")
    if ref is None:
        return node
    name = ref.rsplit("/", 1)[-1]
    return _resolve(kb_schema()["$defs"][name])


def _strip_unknown(value: Any, node: dict, path: list) -> None:
    node = _resolve(node)
    if isinstance(value, dict) and node.get("additionalProperties") is False:
        known = node.get("properties", {})
        for key in [k for k in value if k not in known]:
            warnings.warn(f"ignoring unknown field {'.'.join(map(str, path + [key]))}", UnknownFieldWarning, stacklevel=4)
            del value[key]
        for key, sub in value.items():
            _strip_unknown(sub, known[key], path + [key])
    elif isinstance(value, list) and "items" in node:
        for i, item in enumerate(value):
            _strip_unknown(item, node["items"], path + [i])
    elif isinstance(value, dict):
        for alt in node.get("oneOf", []) + node.get("anyOf", []):
            alt = _resolve(alt)
            if alt.get("type") == "object":
                _strip_unknown(value, alt, path)


def _schema_error(err: jsonschema.ValidationError) -> KbSchemaError:
    path = list(err.absolute_path)
    section = path[0] if path else None
    index = path[1] if len(path) > 1 and isinstance(path[1], int) else None
    field = ".".join(str(p) for p in path[2:]) or None
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        field = ".".join([*(str(p) for p in path[2:]), *extra]) or None
        return KbSchemaError(f"unknown field(s) {extra}", section, index, field)
    if section is not None and not isinstance(section, str):
        section = None
    return KbSchemaError(err.message, section, index, field)


def document_to_kb(doc: Any, mode: str = "strict") -> KnowledgeBase:
    """Decode a parsed JSON document; the version gate runs first."""
    _check_version(doc)
    if mode == "lenient":
        doc = json.loads(json.dumps(doc))
        _strip_unknown(doc, kb_schema(), [])
    validator = jsonschema.Draft202012Validator(kb_schema())
    errs = sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    if errs:
        raise _schema_error(errs[0])

    classes = [
        ClassDef(
            name=r["name"],
            parent=r.get("parent"),
            layer=Layer(r["layer"]) if r.get("layer") is not None else None,
            kind=ClassKind(r["kind"]),
            abstract=r.get("abstract", False),
        )
        for r in doc["classes"]
    ]
    properties = [
        PropertyDef(
            name=r["name"],
            kind=PropertyKind(r["kind"]),
            domain=r["domain"],
            range=r["range"],
            inverse=r.get("inverse"),
        )
        for r in doc["properties"]
    ]
    compositions = []
    for r in doc["compositions"]:
        card = r.get("cardinality", 1)
        card = Cardinality(card, card) if isinstance(card, int) else Cardinality(card["min"], card["max"])
        compositions.append(
            CompositionAxiom(
                owner=r["owner"],
                part=r["part"],
                mode=CompositionMode(r["mode"]),
                cardinality=card,
                requires=tuple(Requirement(q["class"], q["min"]) for q in r.get("requires", [])),
                excludes=tuple(r.get("excludes", [])),
                slot=r.get("slot"),
                scope=r.get("scope"),
            )
        )
    parameters = [
        ParameterDef(
            name=r["name"],
            unit=r.get("unit", ""),
            links=tuple(ParameterLink(l["class"], LinkKind(l["link"])) for l in r.get("links", [])),
        )
        for r in doc["parameters"]
    ]
    rules = []
    for i, r in enumerate(doc["rules"]):
        try:
            rule = parse_rule(r["name"], r["rule"])
        except RuleSyntaxError as exc:
            raise KbSchemaError(f"{exc.message} at offset {exc.offset}", "rules", i, "rule") from None
        if rule.kind is not RuleKind(r["kind"]):
            raise KbSchemaError(f"rule text is a {rule.kind.value} rule but kind says {r['kind']}", "rules", i, "kind")
        rules.append(rule)
    metadata = [MetadataNote(r["name"], r.get("source", "other"), r["text"]) for r in doc["metadata"]]
    return KnowledgeBase(
        name=doc["name"],
        classes=tuple(classes),
        properties=tuple(properties),
        compositions=tuple(compositions),
        parameters=tuple(parameters),
        rules=tuple(rules),
        maneuvers=tuple(doc["maneuvers"]),
        metadata=tuple(metadata),
    )


# saving ----------------------------------------------------------------


def kb_to_document(kb: KnowledgeBase) -> dict:
    def card(c: Cardinality):
        return c.min if c.is_exact else {"min": c.min, "max": c.max}

    return {
        "format_version": FORMAT_VERSION,
        "name": kb.name,
        "classes": [
            {
                "name": c.name,
                "parent": c.parent,
                "layer": c.layer.value if c.layer is not None else None,
                "kind": c.kind.value,
                "abstract": c.abstract,
            }
            for c in kb.classes
        ],
        "properties": [
            {"name": p.name, "kind": p.kind.value, "domain": p.domain, "range": p.range, "inverse": p.inverse}
            for p in kb.properties
        ],
        "compositions": [
            {
                "owner": a.owner,
                "part": a.part,
                "mode": a.mode.value,
                "cardinality": card(a.cardinality),
                "requires": [{"class": q.cls, "min": q.min_count} for q in a.requires],
                "excludes": list(a.excludes),
                "slot": a.slot,
                "scope": a.scope,
            }
            for a in kb.compositions
        ],
        "parameters": [
            {"name": p.name, "unit": p.unit, "links": [{"class": l.cls, "link": l.link.value} for l in p.links]}
            for p in kb.parameters
        ],
        "rules": [{"name": r.name, "kind": r.kind.value, "rule": format_rule(r)} for r in kb.rules],
        "maneuvers": list(kb.maneuvers),
        "metadata": [{"name": m.name, "source": m.source, "text": m.text} for m in kb.metadata],
    }


def save_kb(kb: KnowledgeBase) -> bytes:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(kb_to_document(kb), indent=2, sort_keys=True, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def write_kb(kb: KnowledgeBase, path: Union[str, os.PathLike]) -> None:
    with io.open(path, "wb") as fh:
        fh.write(save_kb(kb))
