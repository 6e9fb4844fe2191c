"""Static, dependency-free HTML pages: one per scene plus paginated index pages."""

from __future__ import annotations

import hashlib
import math
from html import escape
from pathlib import Path
from typing import Mapping, Optional, Sequence
from urllib.parse import quote

from sceneforge.export.text import element_names, load_templates, participant_names, to_text
from sceneforge.scene import Scene

_PAGE = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
</head>
<body style="font-family: Helvetica, Arial, sans-serif; margin: 1.5em; color: #222;">
{body}
</body>
</html>
"""

_LANE_CELL = "background:#c8e6c9; border:1px dashed #fff; width:9em; height:3.2em; text-align:center; vertical-align:middle;"
_OTHER_CELL = "background:#bdbdbd; width:5em; text-align:center; vertical-align:middle; font-size:small;"
_VEHICLE = "display:inline-block; background:#e53935; color:#fff; padding:0.2em 0.4em; border-radius:3px; font-size:small;"


def export_filename(prefix: str, signature: str, suffix: str) -> str:
    """``prefix + signature + suffix``, hashed when too long for a file system."""
    name = f"{prefix}{signature}{suffix}"
    if len(name.encode("utf-8")) <= 240:
        return name
    digest = hashlib.sha256(signature.encode("utf-8")).hexdigest()[:32]
    return f"{prefix}{digest}{suffix}"


def scene_filename(signature: str) -> str:
    return export_filename("scene-", signature, ".html")


def index_filename(page: int) -> str:
    return "index.html" if page == 1 else f"index-{page}.html"


def page_count(n_scenes: int, page_size: int) -> int:
    if page_size < 1:
        raise ValueError("page size must be >= 1")
    return max(1, math.ceil(n_scenes / page_size))


def _href(name: str) -> str:
    return escape(quote(name), quote=True)


def render_scene(scene: Scene, index_href: str = "index.html") -> str:
    t = load_templates()
    elements = element_names(scene, t)
    names = participant_names(scene, t)
    grid, placement = scene.grid, scene.placement
    occupant = {pos: pid for pid, pos in placement.assignment}
    lane_ids = set(grid.lanes)
    positions_by_lane = {(p.lane, p.index): p for p in grid.positions}

    head = "".join(
        f'<th data-kind="InfrastructureElement" style="font-size:small; padding:0.3em;">{escape(elements[e.id])}</th>'
        for e in scene.layout.elements
    )
    rows = []
    for idx in range(grid.positions_per_lane):
        cells = []
        for e in scene.layout.elements:
            if e.id in lane_ids:
                pos = positions_by_lane[(e.id, idx)]
                content = ""
                pid = occupant.get(pos.id)
                if pid is not None:
                    label = f"{names[pid]}: {scene.maneuver_of(pid)}"
                    content = f'<div data-kind="Vehicle" style="{_VEHICLE}">{escape(label)}</div>'
                cells.append(
                    f'<td data-kind="Position" title="position {pos.lane_ordinal}.{pos.index}" style="{_LANE_CELL}">{content}</td>'
                )
            elif idx == 0:
                cells.append(f'<td rowspan="{grid.positions_per_lane}" style="{_OTHER_CELL}"></td>')
        rows.append("<tr>" + "".join(cells) + "</tr>")
    table = (
        '<table style="border-collapse:collapse; margin:1em 0;">'
        f"<thead><tr>{head}</tr></thead><tbody>{''.join(rows)}</tbody></table>"
    )
    rules = "".join(
        f'<li data-kind="TrafficRule">{escape(r.cls)}'
        f"{'' if r.scope is None else ' on ' + escape(elements[r.scope])}</li>"
        for r in scene.layout.rules
    )
    parts = [
        f'<p><a href="{_href(index_href)}">catalog index</a></p>',
        f"<h1 style=\"font-size:1.2em;\">{escape(scene.layout.layout_class)} scene</h1>",
        f'<p style="font-family:monospace; font-size:small; word-break:break-all;">{escape(scene.signature)}</p>',
        '<p style="font-size:small; color:#555;">Driving direction: up. Columns run left to right across the road.</p>',
        table,
        f"<h2 style=\"font-size:1em;\">Traffic rules</h2><ul>{rules}</ul>" if rules else "<p>No traffic rules.</p>",
        f'<p data-kind="Weather">Weather: {escape(scene.weather)}</p>',
    ]
    if scene.verdicts:
        items = "".join(f"<li>{escape(v.rule)} ({escape(v.kind.value)})</li>" for v in scene.verdicts)
        parts.append(f'<div style="background:#fff3e0; border:1px solid #fb8c00; padding:0.5em;"><ul>{items}</ul></div>')
    parts.append(f"<p>{escape(to_text(scene))}</p>")
    return _PAGE.format(title=escape(scene.signature), body="\n".join(parts))


def render_index(
    scenes: Sequence[Scene], page: int, pages: int, stats: Optional[Mapping[str, object]] = None
) -> str:
    parts = ['<h1 style="font-size:1.3em;">Scene catalog</h1>']
    if stats:
        rows = "".join(f"<tr><th style=\"text-align:left; padding-right:1em;\">{escape(str(k))}</th><td>{escape(str(v))}</td></tr>" for k, v in stats.items())
        parts.append(f"<table>{rows}</table>")
    nav = []
    if page > 1:
        nav.append(f'<a href="{_href(index_filename(page - 1))}">previous</a>')
    nav.append(f"page {page} of {pages}")
    if page < pages:
        nav.append(f'<a href="{_href(index_filename(page + 1))}">next</a>')
    parts.append(f"<p>{' | '.join(nav)}</p>")
    items = "".join(
        f'<li><a href="{_href(scene_filename(s.signature))}">{escape(s.signature)}</a></li>' for s in scenes
    )
    parts.append(f'<ol style="font-family:monospace; font-size:small;">{items}</ol>')
    return _PAGE.format(title=f"Scene catalog, page {page}", body="\n".join(parts))


def to_html(
    scenes: Sequence[Scene], out_dir, page_size: int = 100, stats: Optional[Mapping[str, object]] = None
) -> list[Path]:
    """Write index pages and one page per scene; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pages = page_count(len(scenes), page_size)
    written = []
    for page in range(1, pages + 1):
        chunk = scenes[(page - 1) * page_size : page * page_size]
        path = out / index_filename(page)
        path.write_text(render_index(chunk, page, pages, stats), encoding="utf-8")
        written.append(path)
    for s in scenes:
        path = out / scene_filename(s.signature)
        path.write_text(render_scene(s), encoding="utf-8")
        written.append(path)
    return written
