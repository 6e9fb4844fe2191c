"""Scene-graph documents: the lossless JSON form of one scene."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from sceneforge import vocab
from sceneforge.kb import KnowledgeBase, LinkKind, VerdictKind
from sceneforge.layout import ElementInstance, LayoutInstance, RuleInstance
from sceneforge.reasoner import ClassAssertion, PropertyAssertion, Verdict
from sceneforge.scene import GridPosition, Placement, PositionGrid, Scene

NODE_KINDS = ("Scene", "Vehicle", "Position", "InfrastructureElement", "TrafficRule", "Weather")
SCENE_ID = "scene"
WEATHER_ID = "weather"


@dataclass
class SceneGraphDocument:
    nodes: list[dict]
    edges: list[dict]
    catalog: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"catalog": self.catalog, "edges": self.edges, "nodes": self.nodes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneGraphDocument":
        return cls(list(data["nodes"]), list(data["edges"]), dict(data.get("catalog", {})))

    @classmethod
    def from_json(cls, text: str) -> "SceneGraphDocument":
        return cls.from_dict(json.loads(text))

    def node(self, node_id: str) -> dict:
        for n in self.nodes:
            if n["id"] == node_id:
                return n
        raise KeyError(node_id)

    def count(self, kind: str) -> int:
        return sum(1 for n in self.nodes if n["kind"] == kind)


def _nid(instance: int) -> str:
    return SCENE_ID if instance == 0 else f"i{instance}"


def _iid(node_id: str) -> int:
    return 0 if node_id == SCENE_ID else int(node_id[1:])


def _value_out(value):
    return _nid(value) if isinstance(value, int) else {"const": value}


def _value_in(value):
    return value["const"] if isinstance(value, dict) else _iid(value)


def to_scene_graph(scene: Scene, kb: Optional[KnowledgeBase] = None, catalog: Optional[dict] = None) -> SceneGraphDocument:
    """Nodes for scene, elements, rules, positions, vehicles and weather; edges for every relation."""
    layout, grid, placement = scene.layout, scene.grid, scene.placement
    nodes: list[dict] = []
    edges: list[tuple[str, str, str]] = []

    verdicts = [
        {
            "rule": v.rule,
            "verdict": v.kind.value,
            "bindings": {k: _value_out(x) for k, x in v.bindings},
        }
        for v in scene.verdicts
    ]
    nodes.append(
        {
            "id": SCENE_ID,
            "kind": "Scene",
            "class": layout.layout_class,
            "labels": {
                "signature": scene.signature,
                "layout_signature": layout.signature,
                "positions_per_lane": grid.positions_per_lane,
                "verdicts": verdicts,
            },
        }
    )
    for e in layout.elements:
        nodes.append({"id": _nid(e.id), "kind": "InfrastructureElement", "class": e.cls, "labels": {"order": e.id}})
        edges.append((SCENE_ID, _nid(e.id), e.relation))
    for r in layout.rules:
        nodes.append({"id": _nid(r.id), "kind": "TrafficRule", "class": r.cls, "labels": {}})
        edges.append((SCENE_ID, _nid(r.id), vocab.ENABLES))
        edges.append((_nid(r.id), _nid(r.scope if r.scope is not None else 0), vocab.APPLIES_TO))
    for f in layout.arrangement:
        edges.append((_nid(f.subject), _nid(f.object), f.property))
    for p in grid.positions:
        nodes.append(
            {"id": _nid(p.id), "kind": "Position", "class": vocab.POSITION, "labels": {"lane": p.lane_ordinal, "index": p.index}}
        )
    for f in grid.facts:
        if isinstance(f, PropertyAssertion):
            edges.append((_nid(f.subject), _nid(f.object), f.property))
    for pid, cls in placement.classes:
        maneuver = scene.maneuver_of(pid)
        nodes.append({"id": _nid(pid), "kind": "Vehicle", "class": cls, "labels": {"maneuver": maneuver}})
        edges.append((SCENE_ID, _nid(pid), vocab.HAS_PARTICIPANT))
        edges.append((_nid(pid), _nid(placement.position_of(pid)), vocab.ON))
        edges.append((_nid(pid), _nid(placement.position_of(pid)), maneuver))
    weather_labels: dict[str, Any] = {}
    if kb is not None:
        weather_labels["influences"] = sorted(
            p.name for p in kb.parameters for l in p.links if l.cls == scene.weather and l.link is LinkKind.INFLUENCES
        )
    nodes.append({"id": WEATHER_ID, "kind": "Weather", "class": scene.weather, "labels": weather_labels})
    edges.append((SCENE_ID, WEATHER_ID, vocab.HAS_WEATHER))

    edge_dicts = [{"from": a, "to": b, "relation": rel} for a, b, rel in sorted(set(edges))]
    return SceneGraphDocument(nodes, edge_dicts, dict(catalog or {}))


_ARRANGEMENT = {vocab.LEFT_OF, vocab.RIGHT_OF, vocab.IN_FRONT_OF, vocab.BEHIND}


def scene_from_graph(doc: SceneGraphDocument) -> Scene:
    """Rebuild a :class:`Scene` from its graph document."""
    by_kind: dict[str, list[dict]] = {k: [] for k in NODE_KINDS}
    for n in doc.nodes:
        by_kind[n["kind"]].append(n)
    scene_node = by_kind["Scene"][0]
    kinds = {n["id"]: n["kind"] for n in doc.nodes}
    out_edges: dict[str, list[tuple[str, str]]] = {}
    for e in doc.edges:
        out_edges.setdefault(e["from"], []).append((e["to"], e["relation"]))

    relation_of = {to: rel for to, rel in out_edges.get(SCENE_ID, [])}
    elements = sorted(
        (ElementInstance(_iid(n["id"]), n["class"], relation_of[n["id"]]) for n in by_kind["InfrastructureElement"]),
        key=lambda e: e.id,
    )
    rules = []
    for n in sorted(by_kind["TrafficRule"], key=lambda n: _iid(n["id"])):
        target = next(to for to, rel in out_edges.get(n["id"], []) if rel == vocab.APPLIES_TO)
        rules.append(RuleInstance(_iid(n["id"]), n["class"], None if target == SCENE_ID else _iid(target)))
    arrangement = sorted(
        (
            PropertyAssertion(_iid(e["from"]), e["relation"], _iid(e["to"]))
            for e in doc.edges
            if e["relation"] in _ARRANGEMENT and kinds[e["from"]] == "InfrastructureElement"
        ),
        key=lambda f: (f.property, f.subject, f.object),
    )
    layout = LayoutInstance(scene_node["class"], tuple(elements), tuple(rules), tuple(arrangement))

    lane_of = {}
    for e in doc.edges:
        if e["relation"] == vocab.OFFERS_POSITION:
            lane_of[e["to"]] = _iid(e["from"])
    positions = sorted(
        (
            GridPosition(_iid(n["id"]), lane_of[n["id"]], n["labels"]["lane"], n["labels"]["index"])
            for n in by_kind["Position"]
        ),
        key=lambda p: p.id,
    )
    grid_facts = [ClassAssertion(p.id, vocab.POSITION) for p in positions]
    for e in doc.edges:
        if kinds.get(e["to"]) == "Position" and kinds[e["from"]] in ("InfrastructureElement", "Position"):
            grid_facts.append(PropertyAssertion(_iid(e["from"]), e["relation"], _iid(e["to"])))
    lanes = tuple(sorted(set(lane_of.values()), key=lambda lane: next(p.lane_ordinal for p in positions if p.lane == lane)))
    grid = PositionGrid(tuple(positions), scene_node["labels"]["positions_per_lane"], lanes, tuple(grid_facts))

    assignment, classes, maneuvers = [], [], []
    for n in sorted(by_kind["Vehicle"], key=lambda n: _iid(n["id"])):
        pid = _iid(n["id"])
        pos = next(to for to, rel in out_edges[n["id"]] if rel == vocab.ON)
        assignment.append((pid, _iid(pos)))
        classes.append((pid, n["class"]))
        maneuvers.append((pid, n["labels"]["maneuver"]))
    verdicts = tuple(
        Verdict(v["rule"], VerdictKind(v["verdict"]), tuple((k, _value_in(x)) for k, x in sorted(v["bindings"].items())))
        for v in scene_node["labels"].get("verdicts", [])
    )
    weather = by_kind["Weather"][0]["class"]
    return Scene(layout, grid, Placement(tuple(assignment), tuple(classes)), tuple(maneuvers), weather, verdicts)


def write_ndjson(docs: Iterable[SceneGraphDocument], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(doc.to_json())
            fh.write("\n")
            n += 1
    return n


def read_ndjson(path) -> list[SceneGraphDocument]:
    with open(path, encoding="utf-8") as fh:
        return [SceneGraphDocument.from_json(line) for line in fh if line.strip()]
