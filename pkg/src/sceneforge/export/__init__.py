"""Renderers for scene catalogs: scene-graph JSON, text, DOT and HTML."""

from sceneforge.export.dot import to_dot
from sceneforge.export.graph import SceneGraphDocument, read_ndjson, scene_from_graph, to_scene_graph, write_ndjson
from sceneforge.export.html import to_html
from sceneforge.export.text import to_text

__all__ = [
    "SceneGraphDocument",
    "read_ndjson",
    "scene_from_graph",
    "to_dot",
    "to_html",
    "to_scene_graph",
    "to_text",
    "write_ndjson",
]
