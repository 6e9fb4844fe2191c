import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

import kbgen
from sceneforge.kb import (
    Atom,
    Cardinality,
    ClassDef,
    ClassKind,
    CompositionAxiom,
    CompositionMode,
    Layer,
    PropertyDef,
    PropertyKind,
    Rule,
    RuleKind,
    UnknownClassError,
    Var,
    errors,
    subclasses_of,
    validate_kb,
)


def codes(kb):
    return {d.code for d in errors(validate_kb(kb))}


def test_sample_kb_is_valid_and_sized(kb):
    assert errors(validate_kb(kb)) == []
    assert (len(kb.classes), kb.axiom_count(), len(kb.rules)) == (41, 180, 11)


def test_subclass_closure(kb):
    assert subclasses_of(kb, "Vehicle") == {"Vehicle", "Car", "Truck"}
    assert kb.is_a("PerLaneSpeedLimit", "TrafficRule")
    assert kb.ancestors("Car") == ["Car", "Vehicle", "Participant"]
    with pytest.raises(UnknownClassError):
        subclasses_of(kb, "Bicycle")


def test_collections_are_canonically_ordered(kb):
    shuffled = list(kb.classes)
    random.Random(0).shuffle(shuffled)
    assert replace(kb, classes=tuple(shuffled)) == kb


def test_hierarchy_cycle_is_reported(kb):
    classes = [c if c.name != "Vehicle" else replace(c, parent="Car") for c in kb.classes]
    assert "hierarchy-cycle" in codes(replace(kb, classes=tuple(classes)))


def test_missing_inverse_on_arrangement_property(kb):
    props = [p if p.name != "left_of" else replace(p, inverse=None) for p in kb.properties]
    found = codes(replace(kb, properties=tuple(props)))
    assert {"missing-inverse", "inverse-mismatch"} <= found


def test_composition_reference_and_cardinality_errors(kb):
    bad = (
        CompositionAxiom("RQ31", "Ghost", CompositionMode.MANDATORY, Cardinality(1, 1), slot=1),
        CompositionAxiom("RQ31", "Lane", CompositionMode.MANDATORY, Cardinality(3, 2), slot=2),
    )
    found = codes(replace(kb, compositions=kb.compositions[:0] + bad))
    assert {"unknown-reference", "bad-cardinality"} <= found


def test_element_part_needs_slot(kb):
    axiom = CompositionAxiom("RQ31", "Lane", CompositionMode.MANDATORY, Cardinality(2, 2))
    assert "missing-slot" in codes(replace(kb, compositions=(axiom,)))


def test_rule_range_restriction(kb):
    rule = Rule("free_head", RuleKind.INFERENCE, (Atom("Car", (Var("x"),)),), (), Atom("on", (Var("x"), Var("y"))))
    assert "range-restriction" in codes(replace(kb, rules=kb.rules + (rule,)))


def test_negation_cycle_reported(kb):
    x = Var("x")
    classes = kb.classes + (ClassDef("Odd", "Position", Layer.L4_OBJECTS, ClassKind.POSITION),)
    rule = Rule("odd", RuleKind.INFERENCE, (Atom("Position", (x,)),), (Atom("Odd", (x,)),), Atom("Odd", (x,)))
    assert "negation-cycle" in codes(replace(kb, classes=classes, rules=kb.rules + (rule,)))


def test_maneuvers_must_be_leaves(kb):
    assert "bad-maneuver" in codes(replace(kb, maneuvers=kb.maneuvers + ("Vehicle",)))


def test_class_and_property_name_clash(kb):
    prop = PropertyDef("Car", PropertyKind.STRUCTURAL, "Lane", "Position")
    assert "duplicate-name" in codes(replace(kb, properties=kb.properties + (prop,)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_kbs_validate(seed):
    assert errors(validate_kb(kbgen.random_kb(random.Random(seed)))) == []
