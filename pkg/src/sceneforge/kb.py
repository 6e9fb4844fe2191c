"""In-memory model of the terminological box plus validation.

Everything here is immutable once built.  Assertional facts live in
:mod:`sceneforge.reasoner`, which owns the fact store.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Optional, Union

IDENTIFIER_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]{0,63}$")


class Layer(str, enum.Enum):
    L1_ROAD = "L1_Road"
    L2_TRAFFIC_INFRASTRUCTURE = "L2_TrafficInfrastructure"
    L3_TEMPORARY_MANIPULATION = "L3_TemporaryManipulation"
    L4_OBJECTS = "L4_Objects"
    L5_ENVIRONMENT = "L5_Environment"


class ClassKind(str, enum.Enum):
    ELEMENT = "Element"
    TRAFFIC_RULE = "TrafficRule"
    PARTICIPANT = "Participant"
    MANEUVER = "Maneuver"
    WEATHER_SETUP = "WeatherSetup"
    POSITION = "Position"


class PropertyKind(str, enum.Enum):
    STRUCTURAL = "Structural"
    ARRANGEMENT = "Arrangement"
    BEHAVIORAL = "Behavioral"
    PARAMETER_LINK = "ParameterLink"


class CompositionMode(str, enum.Enum):
    MANDATORY = "Mandatory"
    OPTIONAL = "Optional"
    ENABLED = "Enabled"


class LinkKind(str, enum.Enum):
    INCLUDES = "Includes"
    INFLUENCES = "Influences"


class RuleKind(str, enum.Enum):
    INFERENCE = "Inference"
    CONSTRAINT = "Constraint"


class VerdictKind(str, enum.Enum):
    FORBIDDEN = "Forbidden"
    INVALID_COMFORT_ONLY = "InvalidComfortOnly"


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


class UnknownClassError(LookupError):
    pass


@dataclass(frozen=True)
class ClassDef:
    name: str
    parent: Optional[str] = None
    layer: Optional[Layer] = None
    kind: ClassKind = ClassKind.ELEMENT
    abstract: bool = False


@dataclass(frozen=True)
class PropertyDef:
    name: str
    kind: PropertyKind
    domain: str
    range: str
    inverse: Optional[str] = None


@dataclass(frozen=True)
class Cardinality:
    min: int
    max: int

    @classmethod
    def exactly(cls, n: int) -> "Cardinality":
        return cls(n, n)

    @property
    def is_exact(self) -> bool:
        return self.min == self.max


@dataclass(frozen=True)
class Requirement:
    """Sibling-part predicate: at least ``min_count`` instances of ``cls``."""

    cls: str
    min_count: int


@dataclass(frozen=True)
class CompositionAxiom:
    """``owner`` has ``part`` with the given mode and cardinality.

    ``slot`` orders cross-section elements left to right; traffic-rule parts
    leave it unset.  ``scope`` names a sibling part class: one rule instance
    is created per element of that class.  ``None`` binds the rule to the
    whole layout.
    """

    owner: str
    part: str
    mode: CompositionMode
    cardinality: Cardinality = Cardinality(1, 1)
    requires: tuple[Requirement, ...] = ()
    excludes: tuple[str, ...] = ()
    slot: Optional[int] = None
    scope: Optional[str] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.owner, self.part)


@dataclass(frozen=True)
class ParameterLink:
    cls: str
    link: LinkKind


@dataclass(frozen=True)
class ParameterDef:
    name: str
    unit: str = ""
    links: tuple[ParameterLink, ...] = ()


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Term = Union[Var, str]


@dataclass(frozen=True)
class Atom:
    """``predicate(args)``: arity 1 is a class pattern, arity 2 a property."""

    predicate: str
    args: tuple[Term, ...]

    @property
    def is_class_atom(self) -> bool:
        return len(self.args) == 1

    def variables(self) -> set[str]:
        return {a.name for a in self.args if isinstance(a, Var)}

    def constants(self) -> list[str]:
        return [a for a in self.args if not isinstance(a, Var)]

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Rule:
    name: str
    kind: RuleKind
    body: tuple[Atom, ...]
    negated: tuple[Atom, ...] = ()
    head: Optional[Atom] = None
    verdict: Optional[VerdictKind] = None

    def body_variables(self) -> set[str]:
        out: set[str] = set()
        for atom in self.body:
            out |= atom.variables()
        return out


@dataclass(frozen=True)
class MetadataNote:
    """Provenance note: guideline source, functional-description exclusion, expert deviation."""

    name: str
    source: str
    text: str


@dataclass(frozen=True)
class KnowledgeBase:
    """The terminological box.

    Collections are normalised to canonical order on construction so that
    structural equality does not depend on record order.  The maneuver
    catalog keeps its declared order.
    """

    name: str = "unnamed"
    classes: tuple[ClassDef, ...] = ()
    properties: tuple[PropertyDef, ...] = ()
    compositions: tuple[CompositionAxiom, ...] = ()
    parameters: tuple[ParameterDef, ...] = ()
    rules: tuple[Rule, ...] = ()
    maneuvers: tuple[str, ...] = ()
    metadata: tuple[MetadataNote, ...] = ()
    _cache: dict = field(default_factory=dict, init=False, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        put = object.__setattr__
        put(self, "classes", tuple(sorted(self.classes, key=lambda c: c.name)))
        put(self, "properties", tuple(sorted(self.properties, key=lambda p: p.name)))
        comps = (
            replace(
                a,
                requires=tuple(sorted(a.requires, key=lambda r: (r.cls, r.min_count))),
                excludes=tuple(sorted(a.excludes)),
            )
            for a in self.compositions
        )
        put(self, "compositions", tuple(sorted(comps, key=lambda a: a.key)))
        params = (replace(p, links=tuple(sorted(p.links, key=lambda l: (l.cls, l.link.value)))) for p in self.parameters)
        put(self, "parameters", tuple(sorted(params, key=lambda p: p.name)))
        put(self, "rules", tuple(sorted(self.rules, key=lambda r: r.name)))
        put(self, "metadata", tuple(sorted(self.metadata, key=lambda m: m.name)))
        put(self, "maneuvers", tuple(self.maneuvers))

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        for key in [k for k in state if k not in self.__dataclass_fields__]:
            del state[key]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    # lookups -----------------------------------------------------------

    @cached_property
    def class_map(self) -> dict[str, ClassDef]:
        return {c.name: c for c in self.classes}

    @cached_property
    def property_map(self) -> dict[str, PropertyDef]:
        return {p.name: p for p in self.properties}

    @cached_property
    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {c.name: [] for c in self.classes}
        for c in self.classes:
            if c.parent is not None and c.parent in out:
                out[c.parent].append(c.name)
        return out

    @cached_property
    def _descendants(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}
        for name in self.class_map:
            seen = {name}
            stack = [name]
            while stack:
                for child in self.children[stack.pop()]:
                    if child not in seen:
                        seen.add(child)
                        stack.append(child)
            out[name] = frozenset(seen)
        return out

    def subclasses_of(self, cls: str) -> frozenset[str]:
        return subclasses_of(self, cls)

    def ancestors(self, cls: str) -> list[str]:
        """``cls`` followed by its parents up to the root (cycle safe)."""
        chain = [cls]
        seen = {cls}
        parent = self.class_map[cls].parent
        while parent is not None and parent in self.class_map and parent not in seen:
            chain.append(parent)
            seen.add(parent)
            parent = self.class_map[parent].parent
        return chain

    def is_a(self, cls: str, ancestor: str) -> bool:
        return ancestor in self.ancestors(cls)

    def compositions_of(self, owner: str) -> list[CompositionAxiom]:
        return [a for a in self.compositions if a.owner == owner]

    def concrete_classes(self, kind: ClassKind) -> list[str]:
        return [c.name for c in self.classes if c.kind == kind and not c.abstract]

    def axiom_count(self) -> int:
        """Number of logical axioms in the usual OWL accounting.

        One per subclass link, property domain, range and inverse, composition
        axiom and each of its requires/excludes predicates, parameter link and
        pairwise maneuver disjointness.
        """
        n = sum(1 for c in self.classes if c.parent is not None)
        for p in self.properties:
            n += 2 + (p.inverse is not None)
        for a in self.compositions:
            n += 1 + len(a.requires) + len(a.excludes)
        n += sum(len(p.links) for p in self.parameters)
        m = len(self.maneuvers)
        return n + m * (m - 1) // 2


def subclasses_of(kb: KnowledgeBase, cls: str) -> frozenset[str]:
    """Reflexive-transitive set of subclasses of ``cls``."""
    try:
        return kb._descendants[cls]
    except KeyError:
        raise UnknownClassError(f"unknown class {cls!r}") from None


# validation ------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value}: [{self.code}] {self.location}: {self.message}"


def errors(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.severity is Severity.ERROR]


def validate_kb(kb: KnowledgeBase) -> list[Diagnostic]:
    """Check every model invariant; returns diagnostics, never raises."""
    out: list[Diagnostic] = []

    def err(code: str, where: str, msg: str) -> None:
        out.append(Diagnostic(Severity.ERROR, code, where, msg))

    def warn(code: str, where: str, msg: str) -> None:
        out.append(Diagnostic(Severity.WARNING, code, where, msg))

    for section, names in (
        ("class", [c.name for c in kb.classes]),
        ("property", [p.name for p in kb.properties]),
        ("parameter", [p.name for p in kb.parameters]),
        ("rule", [r.name for r in kb.rules]),
    ):
        seen: set[str] = set()
        for name in names:
            if not IDENTIFIER_RE.match(name):
                err("bad-identifier", f"{section} {name}", "identifier must be ASCII, start with a letter, max 64 chars")
            if name in seen:
                err("duplicate-name", f"{section} {name}", f"duplicate {section} name")
            seen.add(name)
    for name in set(kb.class_map) & set(kb.property_map):
        err("duplicate-name", f"class {name}", "name used for both a class and a property")

    classes = kb.class_map
    for c in kb.classes:
        where = f"class {c.name}"
        if c.parent is not None and c.parent not in classes:
            err("unknown-reference", where, f"parent {c.parent!r} is not a class")
        if c.layer is None and not c.abstract:
            err("missing-layer", where, "non-abstract class without a layer tag")
        if c.layer is Layer.L3_TEMPORARY_MANIPULATION:
            warn("layer3-ignored", where, "layer 3 classes are accepted but ignored by generation")

    reported: set[str] = set()
    for c in kb.classes:
        seen_chain = [c.name]
        parent = c.parent
        while parent is not None and parent in classes:
            if parent in seen_chain:
                start = parent
                if start not in reported:
                    cycle = seen_chain[seen_chain.index(parent):]
                    reported.update(cycle)
                    err("hierarchy-cycle", f"class {start}", f"cycle in class hierarchy at {start}")
                break
            seen_chain.append(parent)
            parent = classes[parent].parent

    props = kb.property_map
    for p in kb.properties:
        where = f"property {p.name}"
        for role, ref in (("domain", p.domain), ("range", p.range)):
            if ref not in classes:
                err("unknown-reference", where, f"{role} {ref!r} is not a class")
        if p.kind is PropertyKind.ARRANGEMENT and p.inverse is None:
            err("missing-inverse", where, f"arrangement property {p.name} declares no inverse")
        if p.inverse is None:
            continue
        q = props.get(p.inverse)
        if q is None:
            err("unknown-reference", where, f"inverse {p.inverse!r} of {p.name} is not a property")
            continue
        if q.inverse != p.name:
            err("inverse-mismatch", where, f"inverse mismatch: {p.name} -> {q.name} but {q.name} -> {q.inverse}")
        elif p.kind is PropertyKind.ARRANGEMENT and (p.domain != q.range or p.range != q.domain):
            err("inverse-signature", where, f"domain/range of {p.name} do not mirror {q.name}")

    parts_by_owner: dict[str, set[str]] = {}
    for a in kb.compositions:
        parts_by_owner.setdefault(a.owner, set()).add(a.part)
    seen_keys: set[tuple[str, str]] = set()
    for a in kb.compositions:
        where = f"composition {a.owner}/{a.part}"
        if a.key in seen_keys:
            err("duplicate-name", where, "part declared twice on the same owner")
        seen_keys.add(a.key)
        for role, ref in (("owner", a.owner), ("part", a.part)):
            if ref not in classes:
                err("unknown-reference", where, f"{role} {ref!r} is not a class")
        lo, hi = a.cardinality.min, a.cardinality.max
        if lo < 0 or hi < lo:
            err("bad-cardinality", where, f"invalid cardinality {lo}..{hi}")
        if a.mode is CompositionMode.MANDATORY and hi < 1:
            err("bad-cardinality", where, "mandatory part must allow at least one instance")
        siblings = parts_by_owner.get(a.owner, set())
        for req in a.requires:
            if req.cls not in siblings:
                err("unknown-reference", where, f"requires {req.cls!r} which is not a part of {a.owner}")
            if req.min_count < 0:
                err("bad-cardinality", where, f"negative requirement on {req.cls}")
        for ex in a.excludes:
            if ex not in siblings:
                err("unknown-reference", where, f"excludes {ex!r} which is not a part of {a.owner}")
            if ex == a.part:
                err("bad-reference", where, "part excludes itself")
        part = classes.get(a.part)
        if part is not None:
            if part.kind is ClassKind.TRAFFIC_RULE:
                if a.slot is not None:
                    warn("slot-ignored", where, "traffic-rule parts have no cross-section slot")
            elif a.slot is None:
                err("missing-slot", where, "cross-section element part needs a slot")
            if a.scope is not None:
                if part.kind is not ClassKind.TRAFFIC_RULE:
                    err("bad-reference", where, "only traffic-rule parts may declare a scope")
                if a.scope not in siblings:
                    err("unknown-reference", where, f"scope {a.scope!r} is not a part of {a.owner}")

    for p in kb.parameters:
        for link in p.links:
            if link.cls not in classes:
                err("unknown-reference", f"parameter {p.name}", f"linked class {link.cls!r} is not a class")

    for r in kb.rules:
        out.extend(_validate_rule(kb, r))

    seen_m: set[str] = set()
    for m in kb.maneuvers:
        where = f"maneuver {m}"
        if m in seen_m:
            err("duplicate-name", where, "maneuver listed twice")
        seen_m.add(m)
        c = classes.get(m)
        if c is None:
            err("unknown-reference", where, f"{m!r} is not a class")
            continue
        if c.kind is not ClassKind.MANEUVER:
            err("bad-maneuver", where, "maneuver catalog entry is not of kind Maneuver")
        if c.abstract or kb.children.get(m):
            err("bad-maneuver", where, "maneuvers must be concrete leaves (pairwise disjoint)")

    if not any(d.code in ("unknown-reference", "hierarchy-cycle", "bad-rule", "range-restriction") for d in out):
        from sceneforge.reasoner import StratificationError, stratify

        try:
            stratify(kb)
        except StratificationError as exc:
            err("negation-cycle", f"rule {exc.rules[0]}", str(exc))
    return out


def _validate_rule(kb: KnowledgeBase, r: Rule) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    where = f"rule {r.name}"

    def err(code: str, msg: str) -> None:
        out.append(Diagnostic(Severity.ERROR, code, where, msg))

    if r.kind is RuleKind.INFERENCE and (r.head is None or r.verdict is not None):
        err("bad-rule", "inference rules need a head atom and no verdict")
    if r.kind is RuleKind.CONSTRAINT and (r.head is not None or r.verdict is None):
        err("bad-rule", "constraint rules need a verdict and no head atom")
    if not r.body:
        err("bad-rule", "empty rule body")
    atoms = list(r.body) + list(r.negated) + ([r.head] if r.head else [])
    for atom in atoms:
        if atom.is_class_atom:
            if atom.predicate not in kb.class_map:
                err("unknown-reference", f"class atom {atom} names no class")
        elif len(atom.args) == 2:
            if atom.predicate not in kb.property_map:
                err("unknown-reference", f"property atom {atom} names no property")
        else:
            err("bad-rule", f"atom {atom} must have one or two arguments")
        for const in atom.constants():
            if const not in kb.class_map:
                err("unknown-reference", f"constant {const!r} in {atom} is not a class")
    bound = r.body_variables()
    for atom in r.negated + ((r.head,) if r.head else ()):
        free = atom.variables() - bound
        if free:
            err("range-restriction", f"variables {sorted(free)} in {atom} do not occur in the positive body")
    return out
