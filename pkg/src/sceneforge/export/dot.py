"""Graphviz DOT rendering of scene graphs (vehicles red, positions green, scene gray)."""

from __future__ import annotations

from typing import Union

from sceneforge.export.graph import SceneGraphDocument, to_scene_graph
from sceneforge.scene import Scene

STYLE = {
    "Scene": 'shape=box, style=filled, fillcolor="#9e9e9e"',
    "Vehicle": 'shape=box, style=filled, fillcolor="#e53935", fontcolor=white',
    "Position": 'shape=box, style=filled, fillcolor="#43a047", fontcolor=white',
    "InfrastructureElement": 'shape=box, style=filled, fillcolor="#eeeeee"',
    "TrafficRule": 'shape=octagon, style=filled, fillcolor="#fdd835"',
    "Weather": 'shape=ellipse, style=filled, fillcolor="#81d4fa"',
}


def _q(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(scene: Union[Scene, SceneGraphDocument], name: str = "scene") -> str:
    doc = scene if isinstance(scene, SceneGraphDocument) else to_scene_graph(scene)
    lines = [f"digraph {_q(name)} {{", "  rankdir=LR;", '  node [fontname="Helvetica"];', '  edge [fontname="Helvetica", fontsize=10];']
    for n in doc.nodes:
        if n["kind"] == "Scene":
            parts = [n["class"]]
        elif n["kind"] == "Position":
            parts = [f"Position {n['labels']['lane']}.{n['labels']['index']}"]
        else:
            parts = [n["class"], n["id"]]
        label = "\\n".join(_q(p)[1:-1] for p in parts)
        lines.append(f'  {_q(n["id"])} [label="{label}", kind={_q(n["kind"])}, {STYLE[n["kind"]]}];')
    for e in doc.edges:
        lines.append(f"  {_q(e['from'])} -> {_q(e['to'])} [label={_q(e['relation'])}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
