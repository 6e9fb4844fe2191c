"""Natural-language rendering driven by the phrase templates in ``templates/``."""

from __future__ import annotations

import json
import re
from collections import Counter
from functools import lru_cache
from importlib import resources

from sceneforge.scene import Scene


@lru_cache(maxsize=None)
def load_templates(name: str = "text_en.json") -> dict:
    return json.loads(resources.files("sceneforge.templates").joinpath(name).read_text("utf-8"))


def _words(cls: str) -> str:
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", cls).lower()


def _phrase(t: dict, section: str, key: str) -> str:
    return t[section].get(key, _words(key))


def _join(t: dict, items: list[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    if len(items) == 2:
        return t["list_pair"].format(first=items[0], last=items[1])
    return t["list_many"].format(head=", ".join(items[:-1]), last=items[-1])


def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def element_names(scene: Scene, t: dict) -> dict[int, str]:
    counts = Counter(e.cls for e in scene.layout.elements)
    seen: Counter = Counter()
    out = {}
    for e in scene.layout.elements:
        name = _phrase(t, "classes", e.cls)
        if counts[e.cls] == 1:
            out[e.id] = t["article"]["single"].format(name=name)
        else:
            seen[e.cls] += 1
            out[e.id] = t["article"]["numbered"].format(name=name, number=seen[e.cls])
    return out


def participant_names(scene: Scene, t: dict) -> dict[int, str]:
    """Participants numbered per class in lane-major order."""
    grid, placement = scene.grid, scene.placement
    order = sorted(
        placement.participants,
        key=lambda pid: (grid.position(placement.position_of(pid)).lane_ordinal, grid.position(placement.position_of(pid)).index),
    )
    seen: Counter = Counter()
    out = {}
    for pid in order:
        cls = placement.class_of(pid)
        seen[cls] += 1
        out[pid] = t["article"]["numbered"].format(name=_phrase(t, "classes", cls), number=seen[cls])
    return out


def to_text(scene: Scene, templates: str = "text_en.json") -> str:
    """One sentence per layer: layout, traffic rules, participants, weather."""
    t = load_templates(templates)
    elements = element_names(scene, t)
    sentences = [
        t["layout"].format(
            layout=_phrase(t, "classes", scene.layout.layout_class),
            elements=_join(t, [elements[e.id] for e in scene.layout.elements]),
        )
    ]
    rules = []
    for r in scene.layout.rules:
        rule = _phrase(t, "classes", r.cls)
        if r.scope is None:
            rules.append(t["rule_whole_road"].format(rule=rule))
        else:
            rules.append(t["rule_on_element"].format(rule=rule, element=elements[r.scope]))
    sentences.append(t["rules"].format(rules=_join(t, rules)) if rules else t["rules_none"])

    names = participant_names(scene, t)
    items = []
    for pid in names:
        pos = scene.grid.position(scene.placement.position_of(pid))
        items.append(
            t["participant"].format(
                participant=names[pid],
                lane=elements[pos.lane],
                position=pos.index + 1,
                maneuver=_phrase(t, "maneuvers", scene.maneuver_of(pid)),
            )
        )
    if items:
        sentences.append(_cap(t["participants"].format(participants="; ".join(items))))
    sentences.append(t["weather"].format(weather=_phrase(t, "weathers", scene.weather)))
    if scene.verdicts:
        rules_hit = sorted({v.rule for v in scene.verdicts})
        sentences.append(t["critical"].format(rules=", ".join(rules_hit)))
    return " ".join(sentences)
