"""End-to-end generation: KB file to scene catalog, stats and exports."""

from __future__ import annotations

import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from sceneforge import __version__, vocab
from sceneforge.export.html import export_filename
from sceneforge.kb import ClassKind, KnowledgeBase, UnknownClassError
from sceneforge.kbformat import load_kb, sample_kb_path
from sceneforge.layout import LayoutInstance, arrange, enumerate_layouts, layout_classes
from sceneforge.reasoner import Fact, format_fact
from sceneforge.scene import (
    Mode,
    Scene,
    SceneStats,
    build_grid,
    enumerate_placements,
    enumerate_scenes,
    evaluate_assignment,
    infer_to_fixpoint,
    scene_store,
)

FORMATS = ("ndjson", "html", "text", "dot")
# Fields that change where or how fast output is written, never its content.
_NOT_ECHOED = ("out", "jobs", "formats", "trace")


class VocabularyError(ValueError):
    """The KB lacks a property the generator relies on."""


class UnknownSignatureError(LookupError):
    pass


@dataclass
class GenerationConfig:
    kb: str = ""
    layouts: tuple[str, ...] = ()  # class names or layout signatures; empty = all
    positions_per_lane: int = 1
    participants: dict[str, int] = field(default_factory=dict)
    mode: str = "comfort"
    weather: tuple[str, ...] = ()  # empty = every concrete weather setup
    formats: tuple[str, ...] = ("ndjson",)
    out: str = "out"
    page_size: int = 100
    max_scenes: int = 0  # 0 = unlimited
    trace: bool = False
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.positions_per_lane < 1:
            raise ValueError("positions_per_lane must be >= 1")
        if any(n < 0 for n in self.participants.values()):
            raise ValueError("participant counts must be >= 0")
        if self.max_scenes < 0:
            raise ValueError("max_scenes must be >= 0")
        if self.page_size < 1:
            raise ValueError("page_size must be >= 1")
        self.mode = Mode(self.mode).value
        bad = sorted(set(self.formats) - set(FORMATS))
        if bad:
            raise ValueError(f"unknown output format(s): {', '.join(bad)}")

    def echo(self) -> dict:
        d = asdict(self)
        for k in _NOT_ECHOED:
            d.pop(k)
        d["kb"] = os.path.basename(d["kb"]) if d["kb"] else sample_kb_path().name
        d["layouts"] = list(d["layouts"])
        d["weather"] = list(d["weather"])
        d["participants"] = dict(sorted(d["participants"].items()))
        return d


@dataclass
class GenerationResult:
    kb: KnowledgeBase
    config: GenerationConfig
    layouts: list[LayoutInstance]
    scenes: list[Scene]
    stats: SceneStats
    raw_placements: int
    placements: int
    firings: Counter

    def catalog_metadata(self) -> dict:
        return {
            "kb": self.kb.name,
            "config": self.config.echo(),
            "generated_at": generation_timestamp(),
            "tool_version": __version__,
        }

    def report(self) -> dict:
        return {
            "classes": len(self.kb.classes),
            "axioms": self.kb.axiom_count(),
            "rules": len(self.kb.rules),
            "layouts": len(self.layouts),
            "placements_raw": self.raw_placements,
            "placements_deduplicated": self.placements,
            "candidate_scenes": self.stats.candidates,
            "comfort_scenes": self.stats.comfort_scenes,
            "critical_scenes": self.stats.critical_scenes,
            "scenes_emitted": self.stats.emitted,
            "scenes_eliminated": self.stats.eliminated,
            "scenes_written": len(self.scenes),
            "eliminated_by_rule": dict(sorted(self.stats.by_rule.items())),
        }


def generation_timestamp() -> str:
    """UTC time from SOURCE_DATE_EPOCH, or the epoch, so catalogs stay reproducible."""
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_config_kb(config: GenerationConfig) -> KnowledgeBase:
    kb = load_kb(config.kb or sample_kb_path())
    check_vocabulary(kb)
    return kb


def check_vocabulary(kb: KnowledgeBase) -> None:
    missing = [p for p in vocab.REQUIRED_PROPERTIES if p not in kb.property_map]
    if missing:
        raise VocabularyError(f"KB lacks required properties: {', '.join(missing)}")


def resolve_participants(kb: KnowledgeBase, spec: dict[str, int]) -> dict[str, int]:
    """Map case-insensitive names to concrete participant classes."""
    by_lower = {c.lower(): c for c in kb.concrete_classes(ClassKind.PARTICIPANT)}
    out: dict[str, int] = {}
    for name, n in spec.items():
        cls = name if name in kb.class_map else by_lower.get(name.lower())
        if cls is None or cls not in by_lower.values():
            raise UnknownClassError(f"unknown participant class {name!r}")
        out[cls] = out.get(cls, 0) + n
    return out


def resolve_weathers(kb: KnowledgeBase, names: tuple[str, ...]) -> list[str]:
    available = kb.concrete_classes(ClassKind.WEATHER_SETUP)
    if not names:
        return sorted(available)
    by_lower = {c.lower(): c for c in available}
    out = set()
    for name in names:
        cls = by_lower.get(name.lower())
        if cls is None:
            raise UnknownClassError(f"unknown weather setup {name!r}")
        out.add(cls)
    return sorted(out)


def select_layouts(kb: KnowledgeBase, selectors: tuple[str, ...]) -> list[LayoutInstance]:
    """Layouts for the given class names or exact layout signatures (memoized on the KB)."""
    key = ("layouts", tuple(selectors))
    if key not in kb._cache:
        kb._cache[key] = _select_layouts(kb, tuple(selectors))
    return list(kb._cache[key])


def _select_layouts(kb: KnowledgeBase, selectors: tuple[str, ...]) -> list[LayoutInstance]:
    if not selectors:
        return [arrange(l, kb) for l in enumerate_layouts(kb)]
    owners = set(layout_classes(kb))
    classes, signatures = set(), set()
    for s in selectors:
        if s in owners:
            classes.add(s)
        elif "[" in s:
            signatures.add(s)
            classes.add(s.split("[", 1)[0])
        else:
            raise UnknownClassError(f"unknown layout class {s!r}")
    unknown = sorted(c for c in classes if c not in owners)
    if unknown:
        raise UnknownClassError(f"unknown layout class {unknown[0]!r}")
    layouts = enumerate_layouts(kb, classes)
    picked = [l for l in layouts if l.layout_class in (set(selectors) & owners) or l.signature in signatures]
    found = {l.signature for l in picked}
    missing = sorted(signatures - found)
    if missing:
        raise UnknownClassError(f"no layout has signature {missing[0]!r}")
    return [arrange(l, kb) for l in picked]


# Work units run in worker processes; the KB is shipped once per worker.
_WORKER_KB: Optional[KnowledgeBase] = None


def _init_worker(kb: KnowledgeBase) -> None:
    global _WORKER_KB
    _WORKER_KB = kb


def _run_unit(args) -> tuple[list[Scene], SceneStats, Counter]:
    layout, grid, placements, mode, weathers, trace = args
    stats = SceneStats()
    firings: Counter = Counter()
    hook = (lambda rule, b, fact: firings.update([rule])) if trace else None
    scenes = enumerate_scenes(layout, grid, placements, _WORKER_KB, mode, weathers, stats, hook)
    return scenes, stats, firings


def _units(layouts, kb, config, participants, weathers, jobs):
    units = []
    raw = dedup = 0
    m = sum(participants.values())
    for layout in layouts:
        grid = build_grid(layout, config.positions_per_lane, kb)
        placements = enumerate_placements(grid, participants)
        raw += math.perm(len(grid.positions), m)
        dedup += len(placements)
        chunk = max(1, math.ceil(len(placements) / (4 * jobs))) if jobs > 1 else max(1, len(placements))
        for i in range(0, len(placements), chunk):
            units.append((layout, grid, placements[i : i + chunk], config.mode, weathers, config.trace))
    return units, raw, dedup


def generate(config: GenerationConfig, kb: Optional[KnowledgeBase] = None) -> GenerationResult:
    """Run the pipeline; output order is independent of ``config.jobs``."""
    kb = kb if kb is not None else load_config_kb(config)
    participants = resolve_participants(kb, config.participants)
    weathers = resolve_weathers(kb, config.weather)
    layouts = select_layouts(kb, config.layouts)
    jobs = max(1, config.jobs)
    units, raw, dedup = _units(layouts, kb, config, participants, weathers, jobs)

    if jobs == 1 or len(units) <= 1:
        _init_worker(kb)
        results = [_run_unit(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(kb,)) as pool:
            results = list(pool.map(_run_unit, units))

    stats = SceneStats()
    firings: Counter = Counter()
    found: dict[str, Scene] = {}
    for scenes, s, f in results:
        stats.merge(s)
        firings.update(f)
        for sc in scenes:
            found.setdefault(sc.signature, sc)
    ordered = [found[s] for s in sorted(found)]
    if config.max_scenes:
        ordered = ordered[: config.max_scenes]
    return GenerationResult(kb, config, layouts, ordered, stats, raw, dedup, firings)


def write_outputs(result: GenerationResult, out_dir) -> list[Path]:
    from sceneforge.export import to_dot, to_html, to_scene_graph, to_text, write_ndjson

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    formats = result.config.formats
    if "ndjson" in formats:
        meta = result.catalog_metadata()
        path = out / "catalog.ndjson"
        write_ndjson((to_scene_graph(s, result.kb, meta) for s in result.scenes), path)
        written.append(path)
    if "html" in formats:
        written += to_html(result.scenes, out / "catalog", result.config.page_size, result.report())
    if "text" in formats:
        (out / "text").mkdir(exist_ok=True)
        for s in result.scenes:
            path = out / "text" / export_filename("", s.signature, ".txt")
            path.write_text(to_text(s) + "\n", encoding="utf-8")
            written.append(path)
    if "dot" in formats:
        (out / "dot").mkdir(exist_ok=True)
        for s in result.scenes:
            path = out / "dot" / export_filename("", s.signature, ".dot")
            path.write_text(to_dot(s), encoding="utf-8")
            written.append(path)
    return written


def _use_color(stream) -> bool:
    return "SCENEFORGE_NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def format_report(report: dict, color: Optional[bool] = None, stream=None) -> str:
    stream = stream if stream is not None else sys.stdout
    color = _use_color(stream) if color is None else color
    bold = (lambda s: f"\x1b[1m{s}\x1b[0m") if color else (lambda s: s)
    lines = [
        bold("Knowledge base"),
        f"  classes: {report['classes']}  axioms: {report['axioms']}  rules: {report['rules']}",
        bold("Layouts"),
        f"  infrastructure setups: {report['layouts']}",
        bold("Placements"),
        f"  raw: {report['placements_raw']}  deduplicated: {report['placements_deduplicated']}",
        bold("Scenes"),
        f"  candidates: {report['candidate_scenes']}",
        f"  comfort: {report['comfort_scenes']}  critical: {report['critical_scenes']}",
        f"  emitted: {report['scenes_emitted']}  eliminated: {report['scenes_eliminated']}  written: {report['scenes_written']}",
    ]
    if report["eliminated_by_rule"]:
        lines.append(bold("Eliminated by rule"))
        lines += [f"  {rule}: {n}" for rule, n in report["eliminated_by_rule"].items()]
    return "\n".join(lines)


def explain(config: GenerationConfig, signature: str, kb: Optional[KnowledgeBase] = None) -> list[str]:
    """Derivation trace for one scene of the catalog ``config`` would produce."""
    kb = kb if kb is not None else load_config_kb(config)
    layout_sig = signature.split("~", 1)[0]
    narrowed = GenerationConfig(**{**asdict(config), "layouts": (layout_sig,), "max_scenes": 0, "jobs": 1})
    try:
        result = generate(narrowed, kb)
    except UnknownClassError:
        raise UnknownSignatureError(f"no scene with signature {signature!r}") from None
    scene = next((s for s in result.scenes if s.signature == signature), None)
    if scene is None:
        raise UnknownSignatureError(f"no scene with signature {signature!r}")

    lines = [f"scene {signature}"]

    def hook(rule: str, b: dict, fact: Fact) -> None:
        binding = ", ".join(f"?{k}={v}" for k, v in sorted(b.items()))
        lines.append(f"  {rule} [{binding}] => {format_fact(fact)}")

    lines.append("inferred before maneuver assignment:")
    store = scene_store(scene.layout, scene.grid, scene.placement)
    infer_to_fixpoint(store, kb, hook)
    lines.append("inferred after maneuver assignment:")
    verdicts = evaluate_assignment(store, kb, scene.maneuvers, hook)
    lines.append("constraints checked: " + ", ".join(r.name for r in kb.rules if r.verdict is not None))
    if verdicts:
        for v in verdicts:
            binding = ", ".join(f"?{k}={x}" for k, x in v.bindings)
            lines.append(f"verdict {v.rule}: {v.kind.value} [{binding}]")
    else:
        lines.append("verdicts: none")
    return lines
