"""Author the bundled German-motorway sample KB.

Writes src/sceneforge/data/german_motorway.kb.json in canonical form.
Run after editing; the test suite pins the resulting counts.
"""

from __future__ import annotations

import sys
from pathlib import Path

from sceneforge.kb import (
    Cardinality,
    ClassDef,
    ClassKind as K,
    CompositionAxiom,
    CompositionMode as M,
    KnowledgeBase,
    Layer as L,
    LinkKind,
    MetadataNote,
    ParameterDef,
    ParameterLink,
    PropertyDef,
    PropertyKind as P,
    Requirement,
    validate_kb,
)
from sceneforge.kbformat import save_kb
from sceneforge.rulelang import parse_rule

OUT = Path(__file__).resolve().parents[1] / "src" / "sceneforge" / "data" / "german_motorway.kb.json"

MANEUVERS = [
    "DriveUp",
    "Follow",
    "Approach",
    "Pass",
    "LaneChangeLeft",
    "LaneChangeRight",
    "Turn",
    "TurnBack",
    "SafeStop",
    "FallBack",
    "StartFromStand",
]


def classes() -> list[ClassDef]:
    out = [
        ClassDef("SceneEntity", None, None, K.ELEMENT, True),
        ClassDef("RoadLayout", "SceneEntity", L.L1_ROAD, K.ELEMENT, True),
        ClassDef("MotorwayCrossSection", "RoadLayout", L.L1_ROAD, K.ELEMENT, True),
        ClassDef("RQ31", "MotorwayCrossSection", L.L1_ROAD),
        ClassDef("RQ36", "MotorwayCrossSection", L.L1_ROAD),
        ClassDef("RQ43_5", "MotorwayCrossSection", L.L1_ROAD),
        ClassDef("CrossSectionElement", "SceneEntity", L.L1_ROAD, K.ELEMENT, True),
        ClassDef("Lane", "CrossSectionElement", L.L1_ROAD),
        ClassDef("HardShoulder", "CrossSectionElement", L.L1_ROAD),
        ClassDef("Embankment", "CrossSectionElement", L.L1_ROAD),
        ClassDef("Barrier", "CrossSectionElement", L.L2_TRAFFIC_INFRASTRUCTURE, K.ELEMENT, True),
        ClassDef("MedianBarrier", "Barrier", L.L2_TRAFFIC_INFRASTRUCTURE),
        ClassDef("CrashBarrier", "Barrier", L.L2_TRAFFIC_INFRASTRUCTURE),
        ClassDef("Position", "SceneEntity", L.L4_OBJECTS, K.POSITION),
        ClassDef("Occupied", "Position", L.L4_OBJECTS, K.POSITION),
        ClassDef("BlockedAhead", "Position", L.L4_OBJECTS, K.POSITION),
        ClassDef("TrafficRule", None, L.L2_TRAFFIC_INFRASTRUCTURE, K.TRAFFIC_RULE, True),
        ClassDef("SpeedLimit", "TrafficRule", L.L2_TRAFFIC_INFRASTRUCTURE, K.TRAFFIC_RULE),
        ClassDef("PerLaneSpeedLimit", "SpeedLimit", L.L2_TRAFFIC_INFRASTRUCTURE, K.TRAFFIC_RULE),
        ClassDef("NoPassingZone", "TrafficRule", L.L2_TRAFFIC_INFRASTRUCTURE, K.TRAFFIC_RULE),
        ClassDef("NoPassingForTrucks", "TrafficRule", L.L2_TRAFFIC_INFRASTRUCTURE, K.TRAFFIC_RULE),
        ClassDef("Participant", None, L.L4_OBJECTS, K.PARTICIPANT, True),
        ClassDef("Vehicle", "Participant", L.L4_OBJECTS, K.PARTICIPANT, True),
        ClassDef("Car", "Vehicle", L.L4_OBJECTS, K.PARTICIPANT),
        ClassDef("Truck", "Vehicle", L.L4_OBJECTS, K.PARTICIPANT),
        ClassDef("Maneuver", None, L.L4_OBJECTS, K.MANEUVER, True),
        ClassDef("WeatherSetup", None, L.L5_ENVIRONMENT, K.WEATHER_SETUP, True),
        ClassDef("Sunny", "WeatherSetup", L.L5_ENVIRONMENT, K.WEATHER_SETUP),
        ClassDef("Rainy", "WeatherSetup", L.L5_ENVIRONMENT, K.WEATHER_SETUP),
        ClassDef("Cloudy", "WeatherSetup", L.L5_ENVIRONMENT, K.WEATHER_SETUP),
    ]
    out += [ClassDef(m, "Maneuver", L.L4_OBJECTS, K.MANEUVER) for m in MANEUVERS]
    return out


def properties() -> list[PropertyDef]:
    return [
        PropertyDef("consists_of", P.STRUCTURAL, "RoadLayout", "CrossSectionElement"),
        PropertyDef("has_optional", P.STRUCTURAL, "RoadLayout", "CrossSectionElement"),
        PropertyDef("enables", P.STRUCTURAL, "RoadLayout", "TrafficRule"),
        PropertyDef("applies_to", P.STRUCTURAL, "TrafficRule", "SceneEntity"),
        PropertyDef("offers_position", P.STRUCTURAL, "Lane", "Position"),
        PropertyDef("left_of", P.ARRANGEMENT, "SceneEntity", "SceneEntity", "right_of"),
        PropertyDef("right_of", P.ARRANGEMENT, "SceneEntity", "SceneEntity", "left_of"),
        PropertyDef("in_front_of", P.ARRANGEMENT, "SceneEntity", "SceneEntity", "behind"),
        PropertyDef("behind", P.ARRANGEMENT, "SceneEntity", "SceneEntity", "in_front_of"),
        PropertyDef("on", P.BEHAVIORAL, "Participant", "Position"),
        PropertyDef("may_perform", P.BEHAVIORAL, "Participant", "Maneuver"),
        PropertyDef("performs", P.BEHAVIORAL, "Participant", "Maneuver"),
        PropertyDef("has_participant", P.STRUCTURAL, "RoadLayout", "Participant"),
        PropertyDef("has_weather", P.STRUCTURAL, "RoadLayout", "WeatherSetup"),
    ]


def compositions() -> list[CompositionAxiom]:
    out: list[CompositionAxiom] = []
    for layout, lanes in (("RQ31", 2), ("RQ36", 3), ("RQ43_5", 4)):
        one = Cardinality(1, 1)
        out += [
            CompositionAxiom(layout, "MedianBarrier", M.OPTIONAL, one, slot=10),
            CompositionAxiom(layout, "Lane", M.MANDATORY, Cardinality.exactly(lanes), slot=20),
            CompositionAxiom(layout, "HardShoulder", M.MANDATORY, one, slot=30),
            CompositionAxiom(layout, "CrashBarrier", M.OPTIONAL, one, slot=40),
            CompositionAxiom(layout, "Embankment", M.OPTIONAL, one, slot=50),
            CompositionAxiom(layout, "SpeedLimit", M.ENABLED, one, excludes=("PerLaneSpeedLimit",)),
            CompositionAxiom(
                layout,
                "PerLaneSpeedLimit",
                M.ENABLED,
                one,
                requires=(Requirement("Lane", 3),),
                excludes=("SpeedLimit",),
                scope="Lane",
            ),
            CompositionAxiom(layout, "NoPassingZone", M.ENABLED, one, excludes=("NoPassingForTrucks",)),
            CompositionAxiom(layout, "NoPassingForTrucks", M.ENABLED, one, excludes=("NoPassingZone",)),
        ]
    return out


def parameters() -> list[ParameterDef]:
    inc, infl = LinkKind.INCLUDES, LinkKind.INFLUENCES
    return [
        ParameterDef("lane_width", "m", (ParameterLink("Lane", inc), ParameterLink("HardShoulder", inc))),
        ParameterDef("friction_coefficient", "1", (ParameterLink("Lane", inc), ParameterLink("Rainy", infl))),
        ParameterDef("road_condition", "category", (ParameterLink("Lane", inc), ParameterLink("Rainy", infl))),
        ParameterDef("visibility_range", "m", (ParameterLink("Rainy", infl), ParameterLink("Cloudy", infl))),
        ParameterDef("speed_limit_value", "km/h", (ParameterLink("SpeedLimit", inc),)),
        ParameterDef("time_headway", "s", (ParameterLink("Follow", inc), ParameterLink("Approach", inc))),
        ParameterDef("time_to_collision", "s", (ParameterLink("Approach", inc), ParameterLink("FallBack", inc))),
        ParameterDef("relative_speed", "m/s", (ParameterLink("Approach", inc), ParameterLink("FallBack", inc))),
    ]


RULES = {
    "occupied_position": "Participant(?v), on(?v, ?p) -> Occupied(?p)",
    "blocked_ahead": "in_front_of(?f, ?p), Occupied(?f) -> BlockedAhead(?p)",
    "maneuver_follow": "Participant(?v), on(?v, ?p), offers_position(?l, ?p), Lane(?l) -> may_perform(?v, Follow)",
    "maneuver_start_from_stand": "Participant(?v), on(?v, ?p) -> may_perform(?v, StartFromStand)",
    "maneuver_approach": "Participant(?v), on(?v, ?p), BlockedAhead(?p) -> may_perform(?v, Approach)",
    "maneuver_fall_back": "Participant(?v), on(?v, ?p), BlockedAhead(?p) -> may_perform(?v, FallBack)",
    "maneuver_lane_change_left": (
        "Participant(?v), on(?v, ?p), left_of(?q, ?p), not Occupied(?q), not BlockedAhead(?q)"
        " -> may_perform(?v, LaneChangeLeft)"
    ),
    "maneuver_lane_change_right": (
        "Participant(?v), on(?v, ?p), right_of(?q, ?p), not Occupied(?q), not BlockedAhead(?q)"
        " -> may_perform(?v, LaneChangeRight)"
    ),
    "no_passing_zone": "Vehicle(?v), performs(?v, LaneChangeLeft), NoPassingZone(?z) -> !Forbidden",
    "no_passing_for_trucks": "Truck(?t), performs(?t, LaneChangeLeft), NoPassingForTrucks(?z) -> !Forbidden",
    "shared_lane_change_target": (
        "performs(?a, LaneChangeLeft), on(?a, ?p), left_of(?t, ?p),"
        " performs(?b, LaneChangeRight), on(?b, ?q), right_of(?t, ?q) -> !InvalidComfortOnly"
    ),
}

NOTES = [
    MetadataNote(
        "cross_section_guideline",
        "guideline",
        "Cross-sections RQ 31, RQ 36 and RQ 43.5 follow the German motorway design guideline (RAA): "
        "2, 3 and 4 lanes plus a hard shoulder per driving direction.",
    ),
    MetadataNote(
        "per_lane_speed_limits",
        "expert",
        "Lane-individual speed limits are only signposted where a direction has three or more lanes.",
    ),
    MetadataNote(
        "ramps_out_of_range",
        "functional_description",
        "On-ramps, off-ramps and interchanges are outside the modeled functional range and are deliberately absent.",
    ),
    MetadataNote(
        "hard_shoulder_positions",
        "functional_description",
        "Only lanes offer participant positions; standing vehicles on the hard shoulder are not modeled.",
    ),
    MetadataNote(
        "start_from_stand",
        "expert",
        "Start from stand is offered on every occupied position; the sample does not model a stopped-vehicle state.",
    ),
    MetadataNote(
        "construction_sites",
        "functional_description",
        "Layer 3 (temporary manipulations such as construction sites) is not modeled.",
    ),
]


def build() -> KnowledgeBase:
    return KnowledgeBase(
        name="german_motorway",
        classes=tuple(classes()),
        properties=tuple(properties()),
        compositions=tuple(compositions()),
        parameters=tuple(parameters()),
        rules=tuple(parse_rule(name, text) for name, text in RULES.items()),
        maneuvers=tuple(MANEUVERS),
        metadata=tuple(NOTES),
    )


def main() -> int:
    kb = build()
    diags = validate_kb(kb)
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        return 1
    OUT.write_bytes(save_kb(kb))
    print(f"wrote {OUT}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
