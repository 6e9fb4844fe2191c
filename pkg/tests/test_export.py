import json
import re
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import unquote

import jsonschema
import pytest
from hypothesis import given, settings, strategies as st

from sceneforge.export import read_ndjson, scene_from_graph, to_dot, to_html, to_scene_graph, to_text, write_ndjson
from sceneforge.export.graph import NODE_KINDS, SceneGraphDocument
from sceneforge.export.html import index_filename, page_count, scene_filename
from sceneforge.pipeline import GenerationConfig, generate

GOLDEN = Path(__file__).parent / "golden"
SCHEMA = json.loads((Path(__file__).parents[1] / "src/sceneforge/data/scene_graph.schema.json").read_text())
FLAGSHIP = "RQ36[MedianBarrier,Lane^3,HardShoulder,CrashBarrier]"


@pytest.fixture(scope="module")
def flagship(kb):
    cfg = GenerationConfig(layouts=(FLAGSHIP,), positions_per_lane=3, participants={"Car": 3}, weather=("Sunny",))
    return generate(cfg, kb)


@pytest.fixture(scope="module")
def mixed(kb):
    cfg = GenerationConfig(layouts=("RQ43_5",), positions_per_lane=1, participants={"Car": 1, "Truck": 1}, mode="critical", weather=("Rainy",))
    return generate(cfg, kb).scenes


def test_text_rendering(flagship):
    text = to_text(flagship.scenes[0])
    assert text.startswith("The road follows cross-section RQ 36")
    assert "car 3 on lane 1, position 3, approaches the vehicle ahead" in text
    assert text.endswith("The weather is sunny.")


def test_text_mentions_rules_and_critical_annotation(mixed):
    annotated = next(s for s in mixed if s.verdicts)
    assert "Retained as potentially critical" in to_text(annotated)
    scoped = next(s for s in mixed if any(r.scope is not None for r in s.layout.rules))
    assert "a lane speed limit on lane" in to_text(scoped)


def test_dot_golden_snapshot(flagship):
    scene = flagship.scenes[0]
    assert len(scene.placement.participants) == 3
    assert to_dot(scene) == (GOLDEN / "flagship_first_scene.dot").read_text()


def test_dot_node_count_matches_graph(mixed):
    for scene in mixed[:50]:
        doc = to_scene_graph(scene)
        dot = to_dot(doc)
        assert len(re.findall(r"^  \"[^\"]+\" \[label=", dot, re.M)) == len(doc.nodes)
        assert dot.count(" -> ") == len(doc.edges)


def test_graph_shape(flagship, kb):
    scene = flagship.scenes[0]
    doc = to_scene_graph(scene, kb)
    assert {n["kind"] for n in doc.nodes} <= set(NODE_KINDS)
    assert doc.count("Vehicle") == 3 and doc.count("Position") == 9 and doc.count("Weather") == 1
    assert len({n["id"] for n in doc.nodes}) == len(doc.nodes)
    ids = {n["id"] for n in doc.nodes}
    assert all(e["from"] in ids for e in doc.edges)


def test_ndjson_lines_validate_against_schema(flagship, kb, tmp_path):
    path = tmp_path / "catalog.ndjson"
    meta = flagship.catalog_metadata()
    n = write_ndjson((to_scene_graph(s, kb, meta) for s in flagship.scenes[:200]), path)
    assert n == 200
    validator = jsonschema.Draft202012Validator(SCHEMA)
    for line in path.read_text("utf-8").splitlines():
        validator.validate(json.loads(line))
    docs = read_ndjson(path)
    assert [scene_from_graph(d).signature for d in docs] == [s.signature for s in flagship.scenes[:200]]
    assert docs[0].catalog["kb"] == "german_motorway"


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_graph_round_trip_property(mixed, data):
    scene = data.draw(st.sampled_from(mixed))
    doc = SceneGraphDocument.from_json(to_scene_graph(scene).to_json())
    back = scene_from_graph(doc)
    assert back.signature == scene.signature
    assert [v.rule for v in back.verdicts] == [v.rule for v in scene.verdicts]
    assert to_scene_graph(back).to_json() == to_scene_graph(scene).to_json()


class _Checker(HTMLParser):
    VOID = {"meta", "br", "img", "hr", "link", "input"}

    def __init__(self):
        super().__init__()
        self.stack, self.hrefs, self.kinds, self.tags = [], [], [], set()

    def handle_starttag(self, tag, attrs):
        a = dict(attrs)
        self.tags.add(tag)
        if "href" in a:
            self.hrefs.append(a["href"])
        if "src" in a:
            self.hrefs.append(a["src"])
        if "data-kind" in a:
            self.kinds.append(a["data-kind"])
        if tag not in self.VOID:
            self.stack.append(tag)

    def handle_endtag(self, tag):
        assert self.stack and self.stack[-1] == tag, (self.stack, tag)
        self.stack.pop()


def _check(text):
    c = _Checker()
    c.feed(text)
    c.close()
    assert c.stack == []
    assert "script" not in c.tags
    assert not any(re.match(r"^[a-z]+:|^//", h) for h in c.hrefs)
    return c


def test_html_catalog_is_well_formed_and_offline(mixed, tmp_path):
    scenes = mixed[:60]
    paths = to_html(scenes, tmp_path, page_size=7)
    pages = page_count(len(scenes), 7)
    assert (tmp_path / index_filename(pages)).exists() and not (tmp_path / index_filename(pages + 1)).exists()
    assert len(paths) == pages + len(scenes)
    for p in paths:
        checker = _check(p.read_text("utf-8"))
        for h in checker.hrefs:
            assert (tmp_path / unquote(h)).exists()
    scene_page = _check((tmp_path / scene_filename(mixed[0].signature)).read_text("utf-8"))
    assert scene_page.kinds.count("Vehicle") == 2
    assert {"Position", "InfrastructureElement", "Weather"} <= set(scene_page.kinds)


def test_page_count_edges():
    assert page_count(0, 10) == 1 and page_count(10, 10) == 1 and page_count(11, 10) == 2
    with pytest.raises(ValueError):
        page_count(5, 0)


def test_long_signatures_get_short_scene_filenames():
    name = scene_filename("RQ43_5[" + "Lane," * 80 + "]")
    assert len(name.encode()) <= 240 and name.startswith("scene-") and name.endswith(".html")
