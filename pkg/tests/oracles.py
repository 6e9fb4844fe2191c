"""Reference implementations used only by the tests.

Each oracle is written to be obviously correct rather than fast and shares
no evaluation code with the package: it reads the KB's data (class tree,
rule ASTs, inverse declarations) and nothing else.
"""

from __future__ import annotations

import itertools
from collections import Counter

from sceneforge.kb import Atom, KnowledgeBase, Var

# Facts are plain tuples: ("C", x, cls) or ("P", s, prop, o).


def _descendants(kb: KnowledgeBase) -> dict[str, set[str]]:
    out = {c.name: {c.name} for c in kb.classes}
    for c in kb.classes:
        parent, seen = c.parent, set()
        while parent is not None and parent not in seen:
            seen.add(parent)
            out.setdefault(parent, {parent}).add(c.name)
            parent = kb.class_map[parent].parent if parent in kb.class_map else None
    return out


def _atom_matches(atom: Atom, fact: tuple, b: dict, desc: dict) -> dict | None:
    if len(atom.args) == 1:
        if fact[0] != "C" or fact[2] not in desc.get(atom.predicate, {atom.predicate}):
            return None
        values = (fact[1],)
    else:
        if fact[0] != "P" or fact[2] != atom.predicate:
            return None
        values = (fact[1], fact[3])
    b = dict(b)
    for term, value in zip(atom.args, values):
        if isinstance(term, Var):
            if term.name in b and b[term.name] != value:
                return None
            b[term.name] = value
        elif term != value:
            return None
    return b


def _by_predicate(facts) -> dict[str, list]:
    out: dict[str, list] = {}
    for f in facts:
        out.setdefault(f[2], []).append(f)
    return out


def _candidates(atom: Atom, index: dict, desc: dict) -> list:
    if len(atom.args) == 1:
        return [f for c in desc.get(atom.predicate, {atom.predicate}) for f in index.get(c, ()) if f[0] == "C"]
    return [f for f in index.get(atom.predicate, ()) if f[0] == "P"]


def _bindings(atoms, negated, index, desc):
    """Nested-loop join in written order; negation checked last."""
    partial = [{}]
    for atom in atoms:
        facts = _candidates(atom, index, desc)
        partial = [nb for b in partial for f in facts if (nb := _atom_matches(atom, f, b, desc)) is not None]
    return [
        b
        for b in partial
        if not any(_atom_matches(n, f, b, desc) is not None for n in negated for f in _candidates(n, index, desc))
    ]


def _head_fact(head: Atom, b: dict) -> tuple:
    vals = [b[t.name] if isinstance(t, Var) else t for t in head.args]
    return ("C", vals[0], head.predicate) if len(vals) == 1 else ("P", vals[0], head.predicate, vals[1])


def _head_predicates_matching(atom: Atom, heads: set[str], desc: dict) -> set[str]:
    if len(atom.args) == 1:
        return {h for h in heads if h in desc.get(atom.predicate, {atom.predicate})}
    return {atom.predicate} & heads


def oracle_rules(kb: KnowledgeBase) -> list:
    rules = [(r.name, r.body, r.negated, r.head) for r in kb.rules if r.head is not None]
    for p in kb.properties:
        if p.inverse is not None:
            rules.append((f"inv_{p.name}", (Atom(p.name, (Var("x"), Var("y"))),), (), Atom(p.inverse, (Var("y"), Var("x")))))
    return rules


def oracle_strata(kb: KnowledgeBase, rules: list) -> list[list]:
    """Levels by relaxation: head >= positive body, head > negated body."""
    desc = _descendants(kb)
    heads = {r[3].predicate for r in rules}
    level = {h: 0 for h in heads}
    for _ in range(len(heads) + 2):
        changed = False
        for _, body, negated, head in rules:
            need = 0
            for a in body:
                for p in _head_predicates_matching(a, heads, desc):
                    need = max(need, level[p])
            for a in negated:
                for p in _head_predicates_matching(a, heads, desc):
                    need = max(need, level[p] + 1)
            if level[head.predicate] < need:
                level[head.predicate] = need
                changed = True
        if not changed:
            break
    else:
        raise ValueError("not stratifiable")
    top = max(level.values(), default=0)
    return [[r for r in rules if level[r[3].predicate] == k] for k in range(top + 1)]


def prepare(kb: KnowledgeBase) -> tuple:
    """Class closure and strata, computed once per KB."""
    rules = oracle_rules(kb)
    return _descendants(kb), oracle_strata(kb, rules)


def naive_fixpoint(kb: KnowledgeBase, facts, prepared: tuple | None = None) -> set[tuple]:
    desc, strata = prepared or prepare(kb)
    current = set(facts)
    for stratum in strata:
        while True:
            index = _by_predicate(current)
            new = {_head_fact(head, b) for _, body, neg, head in stratum for b in _bindings(body, neg, index, desc)}
            if new <= current:
                break
            current |= new
    return current


def naive_verdicts(kb: KnowledgeBase, facts, desc: dict | None = None) -> set[tuple]:
    desc = desc or _descendants(kb)
    index = _by_predicate(facts)
    out = set()
    for r in kb.rules:
        if r.verdict is None:
            continue
        for b in _bindings(r.body, r.negated, index, desc):
            out.add((r.name, r.verdict.value, tuple(sorted(b.items()))))
    return out


def to_tuple(fact) -> tuple:
    if hasattr(fact, "cls"):
        return ("C", fact.instance, fact.cls)
    return ("P", fact.subject, fact.property, fact.object)


# layouts ---------------------------------------------------------------


def brute_force_layout_count(kb: KnowledgeBase, owner: str) -> int:
    """Distinct layouts; a scoped rule whose scope class is absent yields no instance."""
    desc = _descendants(kb)
    axioms = kb.compositions_of(owner)
    ranges = []
    for a in axioms:
        lo, hi = a.cardinality.min, a.cardinality.max
        if a.mode.value == "Mandatory":
            ranges.append(range(lo, hi + 1))
        else:
            ranges.append([0] + [n for n in range(lo, hi + 1) if n > 0])
    distinct = set()
    for counts in itertools.product(*ranges):
        have = {a.part: c for a, c in zip(axioms, counts)}
        ok = all(
            c == 0
            or (all(have.get(r.cls, 0) >= r.min_count for r in a.requires) and all(have.get(x, 0) == 0 for x in a.excludes))
            for a, c in zip(axioms, counts)
        )
        if ok:
            shown = tuple(
                0 if a.scope is not None and not any(have[p] for p in have if p in desc[a.scope]) else c
                for a, c in zip(axioms, counts)
            )
            distinct.add(shown)
    return len(distinct)


# placements ------------------------------------------------------------


def raw_placements(cells: list, multiset: dict[str, int]) -> list[tuple]:
    """Every injective map of labelled participants to cells."""
    labels = [cls for cls, n in sorted(multiset.items()) for _ in range(n)]
    return [tuple(zip(labels, perm)) for perm in itertools.permutations(cells, len(labels))]


def dedup_placements(raw: list[tuple]) -> set[frozenset]:
    return {frozenset(Counter(p).items()) for p in raw}


# end to end ------------------------------------------------------------


def naive_scenes(kb: KnowledgeBase, layout, ppl: int, multiset: dict[str, int], weathers, mode: str = "comfort") -> set[tuple]:
    """Scene keys ``(layout signature, ppl, sorted (cls, lane, idx, maneuver), weather)``."""
    prepared = prepare(kb)
    desc = prepared[0]
    offer_domain = kb.property_map["offers_position"].domain
    lanes = [e.id for e in layout.elements if e.cls in desc[offer_domain]]
    adjacent = {(f.subject, f.object) for f in layout.arrangement if f.property == "left_of"}
    cell_id = {}
    nid = 1000
    for li in range(len(lanes)):
        for idx in range(ppl):
            cell_id[(li, idx)] = nid
            nid += 1
    base = {to_tuple(f) for f in layout.facts()}
    for (li, idx), pid in cell_id.items():
        base.add(("C", pid, "Position"))
        base.add(("P", lanes[li], "offers_position", pid))
        if idx > 0:
            base.add(("P", cell_id[(li, idx - 1)], "in_front_of", pid))
        if li + 1 < len(lanes) and (lanes[li], lanes[li + 1]) in adjacent:
            base.add(("P", pid, "left_of", cell_id[(li + 1, idx)]))

    assert not any(a.predicate == "performs" for r in kb.rules if r.head is not None for a in r.body + r.negated)
    out = set()
    cells = sorted(cell_id)
    for placement in dedup_placements(raw_placements(cells, multiset)):
        parts = []
        for (cls, cell), n in sorted(placement, key=lambda kv: (kv[0][0], kv[0][1])):
            parts += [(cls, cell)] * n
        facts = set(base)
        vids = []
        for k, (cls, cell) in enumerate(parts):
            vid = 5000 + k
            vids.append((vid, cls, cell))
            facts.add(("C", vid, cls))
            facts.add(("P", vid, "on", cell_id[cell]))
        closed = naive_fixpoint(kb, facts, prepared)
        options = [[m for m in kb.maneuvers if ("P", vid, "may_perform", m) in closed] for vid, _, _ in vids]
        for combo in itertools.product(*options):
            performs = {("P", vid, "performs", m) for (vid, _, _), m in zip(vids, combo)}
            # no inference rule reads performs (asserted below), so the closure only grows by these facts
            verdicts = naive_verdicts(kb, closed | performs, desc)
            if mode == "comfort" and verdicts:
                continue
            if mode == "critical" and any(v[1] == "Forbidden" for v in verdicts):
                continue
            rows = tuple(sorted((cls, cell[0], cell[1], m) for (_, cls, cell), m in zip(vids, combo)))
            for w in weathers:
                out.add((layout.signature, ppl, rows, w))
    return out


def scene_key(scene) -> tuple:
    rows = []
    for pid, pos in scene.placement.assignment:
        p = scene.grid.position(pos)
        rows.append((scene.placement.class_of(pid), p.lane_ordinal, p.index, scene.maneuver_of(pid)))
    return (scene.layout.signature, scene.grid.positions_per_lane, tuple(sorted(rows)), scene.weather)


# flagship --------------------------------------------------------------


def count_flagship_direct(lanes: int = 3, ppl: int = 3, cars: int = 3) -> tuple[int, int]:
    """Hand-coded sample-KB semantics for a rule-free layout with adjacent lanes.

    Returns (comfort scenes, candidates) for one weather setup.
    """
    cells = [(l, i) for l in range(lanes) for i in range(ppl)]
    comfort = candidates = 0
    for occupied in itertools.combinations(cells, cars):
        occ = set(occupied)

        def blocked(c):
            return (c[0], c[1] - 1) in occ

        options = []
        for c in occupied:
            ms = ["Follow", "StartFromStand"]
            if blocked(c):
                ms += ["Approach", "FallBack"]
            left, right = (c[0] - 1, c[1]), (c[0] + 1, c[1])
            if c[0] > 0 and left not in occ and not blocked(left):
                ms.append("LaneChangeLeft")
            if c[0] < lanes - 1 and right not in occ and not blocked(right):
                ms.append("LaneChangeRight")
            options.append(ms)
        for combo in itertools.product(*options):
            candidates += 1
            left_targets = {(c[0] - 1, c[1]) for c, m in zip(occupied, combo) if m == "LaneChangeLeft"}
            right_targets = {(c[0] + 1, c[1]) for c, m in zip(occupied, combo) if m == "LaneChangeRight"}
            if not left_targets & right_targets:
                comfort += 1
    return comfort, candidates
