"""Layer 4/5: positions, participant placement, maneuvers, filtering, weather."""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from sceneforge import vocab
from sceneforge.kb import KnowledgeBase, VerdictKind
from sceneforge.layout import LayoutInstance
from sceneforge.reasoner import (
    ClassAssertion,
    Fact,
    FactStore,
    PropertyAssertion,
    Trace,
    Verdict,
    can_extend,
    check_constraints,
    complete_inverses,
    infer_to_fixpoint,
    stratify,
)


class Mode(str, enum.Enum):
    COMFORT = "comfort"
    CRITICAL = "critical"


class EmptyGridError(ValueError):
    pass


class CapacityError(ValueError):
    pass


class ManeuverInferenceError(ValueError):
    pass


@dataclass(frozen=True)
class GridPosition:
    id: int
    lane: int  # element instance id
    lane_ordinal: int  # 0 = leftmost position-offering element
    index: int  # 0 = front


@dataclass(frozen=True)
class PositionGrid:
    positions: tuple[GridPosition, ...]
    positions_per_lane: int
    lanes: tuple[int, ...]
    facts: tuple[Fact, ...] = ()

    @property
    def next_id(self) -> int:
        return max((p.id for p in self.positions), default=-1) + 1

    def position(self, position_id: int) -> GridPosition:
        return self._by_id[position_id]

    @cached_property
    def _by_id(self) -> dict[int, GridPosition]:
        return {p.id: p for p in self.positions}


@dataclass(frozen=True)
class Placement:
    """Injective participant -> position map plus participant classes."""

    assignment: tuple[tuple[int, int], ...]
    classes: tuple[tuple[int, str], ...]

    @property
    def participants(self) -> list[int]:
        return [pid for pid, _ in self.classes]

    def position_of(self, participant: int) -> int:
        return dict(self.assignment)[participant]

    def class_of(self, participant: int) -> str:
        return dict(self.classes)[participant]

    def facts(self) -> list[Fact]:
        out: list[Fact] = [ClassAssertion(pid, cls) for pid, cls in self.classes]
        out += [PropertyAssertion(pid, vocab.ON, pos) for pid, pos in self.assignment]
        return out


@dataclass(frozen=True)
class Scene:
    layout: LayoutInstance
    grid: PositionGrid
    placement: Placement
    maneuvers: tuple[tuple[int, str], ...]
    weather: str
    verdicts: tuple[Verdict, ...] = ()

    @cached_property
    def signature(self) -> str:
        return scene_signature(self)

    def maneuver_of(self, participant: int) -> str:
        return dict(self.maneuvers)[participant]


def scene_signature(scene: Scene) -> str:
    """Canonical string; equal exactly for scenes equal up to same-class relabeling."""
    return _signature_stem(scene.layout, scene.grid, scene.placement, scene.maneuvers) + scene.weather


def _signature_stem(layout: LayoutInstance, grid: PositionGrid, placement: Placement, maneuvers) -> str:
    return _stem_builder(layout, grid, placement)(maneuvers)


def _stem_builder(layout: LayoutInstance, grid: PositionGrid, placement: Placement):
    """Signature prefix as a function of the maneuver assignment (placement work done once)."""
    classes = dict(placement.classes)
    cells = []
    for pid, pos_id in placement.assignment:
        pos = grid.position(pos_id)
        cells.append((pid, f"{classes[pid]}@{pos.lane_ordinal}.{pos.index}", (classes[pid], pos.lane_ordinal, pos.index)))
    head = f"{layout.signature}~g{grid.positions_per_lane}~"

    def build(maneuvers) -> str:
        chosen = dict(maneuvers)
        rows = sorted((key, chosen[pid], text) for pid, text, key in cells)
        return head + (",".join(f"{text}={m}" for _, m, text in rows) or "-") + "~"

    return build


def position_offering_classes(kb: KnowledgeBase) -> frozenset[str]:
    prop = kb.property_map.get(vocab.OFFERS_POSITION)
    if prop is None or prop.domain not in kb.class_map:
        return frozenset()
    return kb.subclasses_of(prop.domain)


def build_grid(layout: LayoutInstance, positions_per_lane: int, kb: KnowledgeBase) -> PositionGrid:
    """Distribute ``positions_per_lane`` positions on each position-offering element."""
    if positions_per_lane < 1:
        raise ValueError("positions_per_lane must be >= 1")
    offering = position_offering_classes(kb)
    lanes = [e.id for e in layout.elements if e.cls in offering]
    if not lanes:
        raise EmptyGridError(f"layout {layout.signature} has no element offering positions")
    neighbours = {(f.subject, f.object) for f in layout.arrangement if f.property == vocab.LEFT_OF}

    start = layout.instance_count
    positions = []
    for ordinal, lane in enumerate(lanes):
        for idx in range(positions_per_lane):
            positions.append(GridPosition(start + ordinal * positions_per_lane + idx, lane, ordinal, idx))
    store = FactStore()
    for p in positions:
        store.add(ClassAssertion(p.id, vocab.POSITION))
        store.add(PropertyAssertion(p.lane, vocab.OFFERS_POSITION, p.id))
    for ordinal in range(len(lanes)):
        row = positions[ordinal * positions_per_lane : (ordinal + 1) * positions_per_lane]
        for front, back in zip(row, row[1:]):
            store.add(PropertyAssertion(front.id, vocab.IN_FRONT_OF, back.id))
        if ordinal + 1 < len(lanes) and (lanes[ordinal], lanes[ordinal + 1]) in neighbours:
            right = positions[(ordinal + 1) * positions_per_lane : (ordinal + 2) * positions_per_lane]
            for a, b in zip(row, right):
                store.add(PropertyAssertion(a.id, vocab.LEFT_OF, b.id))
    complete_inverses(store, kb)
    return PositionGrid(tuple(positions), positions_per_lane, tuple(lanes), tuple(store))


def placement_count(positions: int, multiset: Mapping[str, int]) -> int:
    """Closed form: positions! / (positions - m)! / prod(count!)."""
    m = sum(multiset.values())
    if m > positions:
        return 0
    out = math.perm(positions, m)
    for c in multiset.values():
        out //= math.factorial(c)
    return out


def enumerate_placements(grid: PositionGrid, participants: Mapping[str, int]) -> list[Placement]:
    """Distinct placements of the class multiset; same-class participants are interchangeable."""
    groups = sorted((cls, n) for cls, n in participants.items() if n > 0)
    total = sum(n for _, n in groups)
    if total > len(grid.positions):
        raise CapacityError(f"{total} participants do not fit on {len(grid.positions)} positions")
    pos_ids = [p.id for p in grid.positions]
    first = grid.next_id
    out: list[tuple[tuple, Placement]] = []

    def rec(gi: int, free: list[int], chosen: list[tuple[str, tuple[int, ...]]]) -> None:
        if gi == len(groups):
            assignment, classes = [], []
            pid = first
            for cls, spots in chosen:
                for spot in spots:
                    assignment.append((pid, spot))
                    classes.append((pid, cls))
                    pid += 1
            key = tuple(
                sorted((cls, grid.position(spot).lane_ordinal, grid.position(spot).index) for cls, spots in chosen for spot in spots)
            )
            out.append((key, Placement(tuple(assignment), tuple(classes))))
            return
        cls, n = groups[gi]
        for spots in itertools.combinations(free, n):
            taken = set(spots)
            rec(gi + 1, [f for f in free if f not in taken], chosen + [(cls, spots)])

    rec(0, pos_ids, [])
    out.sort(key=lambda kp: kp[0])
    return [p for _, p in out]


def scene_store(layout: LayoutInstance, grid: PositionGrid, placement: Placement) -> FactStore:
    store = FactStore(layout.facts())
    store.update(grid.facts)
    store.update(placement.facts())
    return store


def maneuver_sets_from_store(store: FactStore, placement: Placement, kb: KnowledgeBase) -> dict[int, tuple[str, ...]]:
    catalog = kb.maneuvers
    out = {}
    for pid in placement.participants:
        possible = store.objects(pid, vocab.MAY_PERFORM)
        chosen = tuple(m for m in catalog if m in possible)
        if not chosen:
            cls = placement.class_of(pid)
            pos = placement.position_of(pid)
            raise ManeuverInferenceError(f"no maneuver derivable for participant {pid} ({cls} on position {pos})")
        out[pid] = chosen
    return out


def infer_maneuver_sets(
    layout: LayoutInstance, grid: PositionGrid, placement: Placement, kb: KnowledgeBase, trace: Optional[Trace] = None
) -> dict[int, tuple[str, ...]]:
    """Per participant, the maneuvers the KB rules make possible (catalog order)."""
    store = scene_store(layout, grid, placement)
    infer_to_fixpoint(store, kb, trace)
    return maneuver_sets_from_store(store, placement, kb)


@dataclass
class SceneStats:
    """Counts per candidate scene (maneuver assignment x weather)."""

    candidates: int = 0
    eliminated: int = 0
    comfort_scenes: int = 0
    critical_scenes: int = 0
    by_rule: Counter = field(default_factory=Counter)

    @property
    def emitted(self) -> int:
        return self.candidates - self.eliminated

    def merge(self, other: "SceneStats") -> None:
        self.candidates += other.candidates
        self.eliminated += other.eliminated
        self.comfort_scenes += other.comfort_scenes
        self.critical_scenes += other.critical_scenes
        self.by_rule.update(other.by_rule)


@contextmanager
def extended(store: FactStore, kb: KnowledgeBase, facts: Sequence[Fact], trace: Optional[Trace] = None):
    """``store`` plus ``facts``, closed; ``store`` is unchanged afterwards.

    Extends in place and rolls back when that is sound, otherwise works on a copy.
    """
    if can_extend(store, kb, {f.cls if isinstance(f, ClassAssertion) else f.property for f in facts}):
        with store.transaction():
            store.update(facts)
            infer_to_fixpoint(store, kb, trace)
            yield store
    else:
        work = store.copy()
        work.update(facts)
        infer_to_fixpoint(work, kb, trace)
        yield work


def evaluate_assignment(
    store: FactStore, kb: KnowledgeBase, assignment: Iterable[tuple[int, str]], trace: Optional[Trace] = None
) -> list[Verdict]:
    """Constraint verdicts for one maneuver assignment; ``store`` is left unchanged."""
    return _assignment_checker(store, kb, trace)(assignment)


def _assignment_checker(store: FactStore, kb: KnowledgeBase, trace: Optional[Trace]):
    """Per-store choice of the cheapest sound way to evaluate many assignments."""
    if not can_extend(store, kb, (vocab.PERFORMS,)):

        def on_copy(assignment):
            facts = [PropertyAssertion(pid, vocab.PERFORMS, m) for pid, m in assignment]
            with extended(store, kb, facts, trace) as s:
                return check_constraints(s, kb)

        return on_copy
    # if no rule is triggered by performs, the closure grows by the assignment alone
    program = stratify(kb)
    static = store.closed_at == store.generation and vocab.PERFORMS not in program.triggers
    # then a constraint naming a maneuver the assignment lacks cannot fire
    needs = [
        frozenset(a.args[1] for a in cr.rule.body if a.predicate == vocab.PERFORMS and isinstance(a.args[1], str))
        for cr in program.constraints
    ]

    def in_place(assignment):
        if static:
            chosen = {m for _, m in assignment}
            if not any(n <= chosen for n in needs):
                return []
        mark = store.mark()
        try:
            store.update(PropertyAssertion(pid, vocab.PERFORMS, m) for pid, m in assignment)
            if static:
                store.closed_at = store.generation
            else:
                infer_to_fixpoint(store, kb, trace)
            return check_constraints(store, kb)
        finally:
            store.rollback(mark)

    return in_place


def enumerate_scenes(
    layout: LayoutInstance,
    grid: PositionGrid,
    placements: Sequence[Placement],
    kb: KnowledgeBase,
    mode: Mode = Mode.COMFORT,
    weathers: Sequence[str] = ("Sunny",),
    stats: Optional[SceneStats] = None,
    trace: Optional[Trace] = None,
) -> list[Scene]:
    """Cross maneuver alternatives, drop forbidden/invalid ones, permute weather."""
    mode = Mode(mode)
    weathers = sorted(set(weathers))
    stats = stats if stats is not None else SceneStats()
    found: dict[str, Scene] = {}
    base = FactStore(layout.facts())
    base.update(grid.facts)
    infer_to_fixpoint(base, kb, trace)
    for placement in placements:
        with extended(base, kb, placement.facts(), trace) as store:
            found.update(_placement_scenes(store, layout, grid, placement, kb, mode, weathers, stats, trace))
    return [found[s] for s in sorted(found)]


def _placement_scenes(
    store: FactStore,
    layout: LayoutInstance,
    grid: PositionGrid,
    placement: Placement,
    kb: KnowledgeBase,
    mode: Mode,
    weathers: Sequence[str],
    stats: SceneStats,
    trace: Optional[Trace],
) -> dict[str, Scene]:
    nw = len(weathers)
    found: dict[str, Scene] = {}
    options = maneuver_sets_from_store(store, placement, kb)
    pids = placement.participants
    stem_of = _stem_builder(layout, grid, placement)
    check = _assignment_checker(store, kb, trace)
    for combo in itertools.product(*(options[p] for p in pids)):
        assignment = tuple(zip(pids, combo))
        verdicts = check(assignment)
        forbidden = [v for v in verdicts if v.kind is VerdictKind.FORBIDDEN]
        invalid = [v for v in verdicts if v.kind is VerdictKind.INVALID_COMFORT_ONLY]
        stats.candidates += nw
        if not verdicts:
            stats.comfort_scenes += nw
        if not forbidden:
            stats.critical_scenes += nw
        dropped = forbidden if mode is Mode.CRITICAL else verdicts
        if dropped:
            stats.eliminated += nw
            for rule in sorted({v.rule for v in dropped}):
                stats.by_rule[rule] += nw
            continue
        kept = tuple(invalid) if mode is Mode.CRITICAL else ()
        stem = stem_of(assignment)
        for w in weathers:
            scene = Scene(layout, grid, placement, assignment, w, kept)
            scene.__dict__["signature"] = stem + w  # prime the cached_property
            found.setdefault(stem + w, scene)
    return found
