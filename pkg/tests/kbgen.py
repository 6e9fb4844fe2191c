"""Seeded generators for random valid knowledge bases and fact stores."""

from __future__ import annotations

import random

from sceneforge.kb import (
    Atom,
    Cardinality,
    ClassDef,
    ClassKind,
    CompositionAxiom,
    CompositionMode,
    KnowledgeBase,
    Layer,
    LinkKind,
    MetadataNote,
    ParameterDef,
    ParameterLink,
    PropertyDef,
    PropertyKind,
    Requirement,
    Rule,
    RuleKind,
    Var,
    VerdictKind,
)
from sceneforge.reasoner import ClassAssertion, PropertyAssertion

_SOURCES = ["guideline", "functional_description", "expert", "other"]
_TEXT = ["RAA 2008", "expert deviation", "Überholverbot für Lkw", "see guideline 4.2", ""]


def _tree(rng: random.Random, prefix: str, n: int, parent: str, layer: Layer, kind: ClassKind) -> list[ClassDef]:
    out = []
    for i in range(n):
        up = rng.choice([parent] + [c.name for c in out])
        out.append(ClassDef(f"{prefix}{i}", up, layer, kind, abstract=rng.random() < 0.15))
    return out


def random_kb(rng: random.Random) -> KnowledgeBase:
    """A random KB that passes validation: negation only reads base classes."""
    classes = [
        ClassDef("Entity", None, None, ClassKind.ELEMENT, True),
        ClassDef("Layout", "Entity", Layer.L1_ROAD, ClassKind.ELEMENT, True),
        ClassDef("Rule", None, Layer.L2_TRAFFIC_INFRASTRUCTURE, ClassKind.TRAFFIC_RULE, True),
        ClassDef("Agent", None, Layer.L4_OBJECTS, ClassKind.PARTICIPANT, True),
        ClassDef("Maneuver", None, Layer.L4_OBJECTS, ClassKind.MANEUVER, True),
        ClassDef("Weather", None, Layer.L5_ENVIRONMENT, ClassKind.WEATHER_SETUP, True),
    ]
    owners = [ClassDef(f"Road{i}", "Layout", Layer.L1_ROAD) for i in range(rng.randint(1, 3))]
    elements = _tree(rng, "Elem", rng.randint(1, 6), "Entity", rng.choice([Layer.L1_ROAD, Layer.L2_TRAFFIC_INFRASTRUCTURE]), ClassKind.ELEMENT)
    rules_c = _tree(rng, "Reg", rng.randint(0, 3), "Rule", Layer.L2_TRAFFIC_INFRASTRUCTURE, ClassKind.TRAFFIC_RULE)
    agents = _tree(rng, "Agent", rng.randint(1, 3), "Agent", Layer.L4_OBJECTS, ClassKind.PARTICIPANT)
    derived = [ClassDef(f"Derived{i}", "Entity", Layer.L4_OBJECTS, ClassKind.POSITION) for i in range(rng.randint(1, 3))]
    maneuvers = [ClassDef(f"Move{i}", "Maneuver", Layer.L4_OBJECTS, ClassKind.MANEUVER) for i in range(rng.randint(1, 4))]
    weathers = [ClassDef(f"Sky{i}", "Weather", Layer.L5_ENVIRONMENT, ClassKind.WEATHER_SETUP) for i in range(rng.randint(0, 3))]
    classes += owners + elements + rules_c + agents + derived + maneuvers + weathers
    names = [c.name for c in classes]

    properties = [
        PropertyDef("next_to", PropertyKind.ARRANGEMENT, "Entity", "Entity", "prev_to"),
        PropertyDef("prev_to", PropertyKind.ARRANGEMENT, "Entity", "Entity", "next_to"),
        PropertyDef("does", PropertyKind.BEHAVIORAL, "Agent", "Maneuver"),
    ]
    for i in range(rng.randint(0, 3)):
        a, b = rng.choice(names), rng.choice(names)
        if rng.random() < 0.5:
            properties.append(PropertyDef(f"rel{i}", PropertyKind.STRUCTURAL, a, b))
        else:
            properties.append(PropertyDef(f"rel{i}", PropertyKind.STRUCTURAL, a, b, f"inv_rel{i}"))
            properties.append(PropertyDef(f"inv_rel{i}", PropertyKind.STRUCTURAL, b, a, f"rel{i}"))

    compositions = []
    for owner in owners:
        parts = rng.sample([c.name for c in elements], rng.randint(1, len(elements)))
        regs = rng.sample([c.name for c in rules_c], rng.randint(0, len(rules_c)))
        siblings = parts + regs
        for k, part in enumerate(parts):
            lo = rng.randint(0, 2)
            mode = rng.choice(list(CompositionMode))
            hi = max(lo, 1) + rng.randint(0, 1)
            req = tuple(Requirement(s, rng.randint(0, 2)) for s in rng.sample(siblings, rng.randint(0, 1)))
            exc = tuple(s for s in rng.sample(siblings, rng.randint(0, 1)) if s != part)
            compositions.append(CompositionAxiom(owner.name, part, mode, Cardinality(lo, hi), req, exc, slot=10 * k))
        for reg in regs:
            scope = rng.choice([None] + parts)
            compositions.append(CompositionAxiom(owner.name, reg, CompositionMode.ENABLED, Cardinality(1, 1), scope=scope))

    parameters = [
        ParameterDef(
            f"param{i}",
            rng.choice(["", "km/h", "m"]),
            tuple(ParameterLink(rng.choice(names), rng.choice(list(LinkKind))) for _ in range(rng.randint(0, 2))),
        )
        for i in range(rng.randint(0, 3))
    ]

    x, y = Var("x"), Var("y")
    base = [c.name for c in elements + agents]
    rules = []
    for i in range(rng.randint(0, 5)):
        body = [Atom(rng.choice(base), (x,)), Atom("next_to", (x, y))]
        negated = tuple(Atom(rng.choice(base), (y,)) for _ in range(rng.randint(0, 1)))
        if rng.random() < 0.7:
            head = Atom(rng.choice(derived).name, (rng.choice([x, y]),))
            rules.append(Rule(f"r{i}", RuleKind.INFERENCE, tuple(body), negated, head))
        else:
            rules.append(Rule(f"c{i}", RuleKind.CONSTRAINT, tuple(body), negated, None, rng.choice(list(VerdictKind))))
    if maneuvers and rng.random() < 0.5:
        rules.append(
            Rule("uses_move", RuleKind.INFERENCE, (Atom(agents[0].name, (x,)),), (), Atom("does", (x, maneuvers[0].name)))
        )

    metadata = [MetadataNote(f"note{i}", rng.choice(_SOURCES), rng.choice(_TEXT)) for i in range(rng.randint(0, 2))]
    order = list(range(len(classes)))
    rng.shuffle(order)
    return KnowledgeBase(
        name=f"random_{rng.randint(0, 10**6)}",
        classes=tuple(classes[i] for i in order),
        properties=tuple(properties),
        compositions=tuple(compositions),
        parameters=tuple(parameters),
        rules=tuple(rules),
        maneuvers=tuple(m.name for m in maneuvers),
        metadata=tuple(metadata),
    )


def random_motorway_store(rng: random.Random, kb: KnowledgeBase) -> list:
    """Random small fact set over the sample KB vocabulary (not necessarily a real layout)."""
    facts = []
    n = rng.randint(2, 8)
    lanes = list(range(100, 100 + rng.randint(1, 3)))
    for lane in lanes:
        facts.append(ClassAssertion(lane, rng.choice(["Lane", "Lane", "HardShoulder"])))
    cells = list(range(200, 200 + n))
    for c in cells:
        facts.append(ClassAssertion(c, "Position"))
        facts.append(PropertyAssertion(rng.choice(lanes), "offers_position", c))
    for _ in range(rng.randint(0, 2 * n)):
        a, b = rng.sample(cells, 2)
        facts.append(PropertyAssertion(a, rng.choice(["left_of", "right_of", "in_front_of", "behind"]), b))
    vehicles = list(range(300, 300 + rng.randint(0, 4)))
    for v in vehicles:
        facts.append(ClassAssertion(v, rng.choice(["Car", "Truck"])))
        facts.append(PropertyAssertion(v, "on", rng.choice(cells)))
        if rng.random() < 0.5:
            facts.append(PropertyAssertion(v, "performs", rng.choice(list(kb.maneuvers))))
    if rng.random() < 0.5:
        facts.append(ClassAssertion(400, rng.choice(["NoPassingForTrucks", "NoPassingZone", "SpeedLimit"])))
    rng.shuffle(facts)
    return facts
