"""Layer 1/2 layouts: existential enumeration and lateral arrangement."""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional

from sceneforge import vocab
from sceneforge.kb import ClassKind, CompositionAxiom, CompositionMode, KnowledgeBase, Layer, UnknownClassError
from sceneforge.reasoner import ClassAssertion, Fact, FactStore, PropertyAssertion, complete_inverses

log = logging.getLogger(__name__)

_RELATION = {
    CompositionMode.MANDATORY: vocab.CONSISTS_OF,
    CompositionMode.OPTIONAL: vocab.HAS_OPTIONAL,
    CompositionMode.ENABLED: vocab.ENABLES,
}


class UnsatisfiableAxiomError(ValueError):
    def __init__(self, axiom: CompositionAxiom):
        self.axiom = axiom
        reqs = ", ".join(f"{r.cls}>={r.min_count}" for r in axiom.requires)
        super().__init__(f"mandatory part {axiom.part} of {axiom.owner} can never satisfy requires [{reqs}]")


@dataclass(frozen=True)
class ElementInstance:
    id: int
    cls: str
    relation: str = vocab.CONSISTS_OF


@dataclass(frozen=True)
class RuleInstance:
    id: int
    cls: str
    scope: Optional[int] = None  # element id, None = whole layout


@dataclass(frozen=True)
class LayoutInstance:
    """A concrete cross-section; instance 0 is the layout itself.

    Elements are ordered left to right in driving direction and numbered
    1..n in that order; rule instances follow.
    """

    layout_class: str
    elements: tuple[ElementInstance, ...]
    rules: tuple[RuleInstance, ...] = ()
    arrangement: tuple[Fact, ...] = ()

    root = 0

    @property
    def instance_count(self) -> int:
        return 1 + len(self.elements) + len(self.rules)

    def element(self, instance_id: int) -> ElementInstance:
        return self.elements[instance_id - 1]

    @cached_property
    def signature(self) -> str:
        runs = []
        for cls, group in itertools.groupby(e.cls for e in self.elements):
            n = len(list(group))
            runs.append(cls if n == 1 else f"{cls}^{n}")
        scoped: dict[str, list[str]] = {}
        for r in self.rules:
            scoped.setdefault(r.cls, []).append("L" if r.scope is None else str(r.scope))
        rules = "".join(f"+{cls}@{'.'.join(scopes)}" for cls, scopes in sorted(scoped.items()))
        return f"{self.layout_class}[{','.join(runs)}]{rules}"

    def facts(self) -> list[Fact]:
        out: list[Fact] = [ClassAssertion(self.root, self.layout_class)]
        for e in self.elements:
            out.append(ClassAssertion(e.id, e.cls))
            out.append(PropertyAssertion(self.root, e.relation, e.id))
        for r in self.rules:
            out.append(ClassAssertion(r.id, r.cls))
            out.append(PropertyAssertion(self.root, vocab.ENABLES, r.id))
            out.append(PropertyAssertion(r.id, vocab.APPLIES_TO, self.root if r.scope is None else r.scope))
        out.extend(self.arrangement)
        return out


def layout_classes(kb: KnowledgeBase) -> list[str]:
    """Concrete classes owning at least one mandatory composition axiom."""
    owners = {a.owner for a in kb.compositions if a.mode is CompositionMode.MANDATORY}
    return sorted(c for c in owners if c in kb.class_map and not kb.class_map[c].abstract)


def _choices(a: CompositionAxiom) -> list[int]:
    lo, hi = a.cardinality.min, a.cardinality.max
    if a.mode is CompositionMode.MANDATORY:
        return list(range(lo, hi + 1))
    return [0] + list(range(max(lo, 1), hi + 1))


def _satisfied(a: CompositionAxiom, counts: dict[str, int]) -> bool:
    if any(counts.get(r.cls, 0) < r.min_count for r in a.requires):
        return False
    return not any(counts.get(x, 0) > 0 for x in a.excludes)


def _instantiate(kb: KnowledgeBase, owner: str, axioms: list[CompositionAxiom], counts: tuple[int, ...]) -> LayoutInstance:
    element_parts = []
    rule_parts = []
    for a, n in zip(axioms, counts):
        if n == 0:
            continue
        if kb.class_map[a.part].kind is ClassKind.TRAFFIC_RULE:
            rule_parts.append((a, n))
        else:
            element_parts.append((a, n))
    element_parts.sort(key=lambda an: (an[0].slot, an[0].part))
    elements: list[ElementInstance] = []
    for a, n in element_parts:
        for _ in range(n):
            elements.append(ElementInstance(len(elements) + 1, a.part, _RELATION[a.mode]))
    rules: list[RuleInstance] = []
    next_id = len(elements) + 1
    for a, n in sorted(rule_parts, key=lambda an: an[0].part):
        targets: list[Optional[int]]
        if a.scope is None:
            targets = [None]
        else:
            scope_classes = kb.subclasses_of(a.scope)
            targets = [e.id for e in elements if e.cls in scope_classes]
        for target in targets:
            for _ in range(n):
                rules.append(RuleInstance(next_id, a.part, target))
                next_id += 1
    return LayoutInstance(owner, tuple(elements), tuple(rules))


def enumerate_owner(kb: KnowledgeBase, owner: str) -> list[LayoutInstance]:
    axioms = []
    for a in sorted(kb.compositions_of(owner), key=lambda a: a.part):
        if kb.class_map[a.part].layer is Layer.L3_TEMPORARY_MANIPULATION:
            log.warning("ignoring layer-3 part %s of %s", a.part, owner)
            continue
        axioms.append(a)
    satisfiable = {a.key: False for a in axioms if a.mode is CompositionMode.MANDATORY and a.cardinality.min > 0}
    out = []
    for counts in itertools.product(*(_choices(a) for a in axioms)):
        by_part = dict(zip((a.part for a in axioms), counts))
        ok = True
        for a, n in zip(axioms, counts):
            if n == 0:
                continue
            if _satisfied(a, by_part):
                if a.key in satisfiable:
                    satisfiable[a.key] = True
            else:
                ok = False
        if ok:
            out.append(_instantiate(kb, owner, axioms, counts))
    for a in axioms:
        if a.key in satisfiable and not satisfiable[a.key]:
            raise UnsatisfiableAxiomError(a)
    return out


def enumerate_layouts(kb: KnowledgeBase, classes: Optional[Iterable[str]] = None) -> list[LayoutInstance]:
    """Every valid layout of the given layout classes, in canonical order."""
    owners = layout_classes(kb) if classes is None else sorted(set(classes))
    for owner in owners:
        if owner not in kb.class_map:
            raise UnknownClassError(f"unknown layout class {owner!r}")
    found: dict[str, LayoutInstance] = {}
    for owner in owners:
        for layout in enumerate_owner(kb, owner):
            found.setdefault(layout.signature, layout)
    return [found[s] for s in sorted(found)]


def arrange(layout: LayoutInstance, kb: KnowledgeBase) -> LayoutInstance:
    """Attach left_of/right_of facts between directly neighbouring elements."""
    store = FactStore()
    for a, b in zip(layout.elements, layout.elements[1:]):
        store.add(PropertyAssertion(a.id, vocab.LEFT_OF, b.id))
    complete_inverses(store, kb)
    facts = sorted(store, key=lambda f: (f.property, f.subject, f.object))
    return replace(layout, arrangement=tuple(facts))


def element_counts(layout: LayoutInstance) -> Counter:
    return Counter(e.cls for e in layout.elements)
