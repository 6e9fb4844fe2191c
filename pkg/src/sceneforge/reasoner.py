"""Scene-local fact store and a stratified semi-naive forward chainer.

Closed world inside a scene: an absent fact is false.  Inverse property
declarations behave like implicit rules ``p(?x, ?y) -> q(?y, ?x)``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Union

import networkx as nx

from sceneforge.kb import Atom, KnowledgeBase, Rule, RuleKind, Var, VerdictKind

Individual = Union[int, str]


class ClassAssertion(NamedTuple):
    instance: Individual
    cls: str


class PropertyAssertion(NamedTuple):
    subject: Individual
    property: str
    object: Individual


Fact = Union[ClassAssertion, PropertyAssertion]
Trace = Callable[[str, dict, Fact], None]


def predicate_of(fact: Fact) -> str:
    return fact.cls if isinstance(fact, ClassAssertion) else fact.property


def format_fact(fact: Fact) -> str:
    if isinstance(fact, ClassAssertion):
        return f"{fact.cls}({fact.instance})"
    return f"{fact.property}({fact.subject}, {fact.object})"


class StratificationError(ValueError):
    def __init__(self, rules: list[str]):
        self.rules = rules
        super().__init__(f"cycle through negation involving rules {', '.join(rules)}")


class FactStore:
    """Set of facts with subject/property/object indexes.

    ``generation`` counts insertions.  :meth:`mark` and :meth:`rollback`
    restore an earlier state exactly, which lets callers test candidate
    facts without copying the store.
    """

    def __init__(self, facts: Iterable[Fact] = ()):
        self._log: list[Fact] = []
        self._facts: set[Fact] = set()
        self._derived: set[Fact] = set()
        self.by_property: dict[str, set[tuple[Individual, Individual]]] = {}
        self.by_property_object: dict[tuple[str, Individual], set[Individual]] = {}
        self.by_subject_property: dict[tuple[Individual, str], set[Individual]] = {}
        self.by_class: dict[str, set[Individual]] = {}
        self.classes_of: dict[Individual, set[str]] = {}
        self.closed_at: Optional[int] = None
        self._epoch = 0  # bumped when the log is rebuilt; invalidates marks
        for f in facts:
            self.add(f)

    @property
    def generation(self) -> int:
        return len(self._log)

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self._log)

    def facts(self) -> frozenset[Fact]:
        return frozenset(self._facts)

    def facts_since(self, generation: int) -> list[Fact]:
        return self._log[generation:]

    def is_derived(self, fact: Fact) -> bool:
        return fact in self._derived

    def add(self, fact: Fact, derived: bool = False) -> bool:
        """Insert ``fact``; returns False (and changes nothing) if present."""
        if fact in self._facts:
            return False
        self._facts.add(fact)
        self._log.append(fact)
        if derived:
            self._derived.add(fact)
        if type(fact) is ClassAssertion:
            i, c = fact
            self.by_class.setdefault(c, set()).add(i)
            self.classes_of.setdefault(i, set()).add(c)
        else:
            s, p, o = fact
            self.by_property.setdefault(p, set()).add((s, o))
            self.by_property_object.setdefault((p, o), set()).add(s)
            self.by_subject_property.setdefault((s, p), set()).add(o)
        return True

    def update(self, facts: Iterable[Fact]) -> int:
        return sum(self.add(f) for f in facts)

    def _discard(self, fact: Fact) -> None:
        self._facts.discard(fact)
        self._derived.discard(fact)
        if type(fact) is ClassAssertion:
            i, c = fact
            self.by_class[c].discard(i)
            self.classes_of[i].discard(c)
        else:
            s, p, o = fact
            self.by_property[p].discard((s, o))
            self.by_property_object[(p, o)].discard(s)
            self.by_subject_property[(s, p)].discard(o)

    def mark(self) -> tuple[int, Optional[int], int]:
        return (self.generation, self.closed_at, self._epoch)

    def rollback(self, mark: tuple[int, Optional[int], int]) -> None:
        generation, closed_at, epoch = mark
        if epoch != self._epoch:
            raise RuntimeError("cannot roll back across retract_derived")
        while len(self._log) > generation:
            self._discard(self._log.pop())
        self.closed_at = closed_at

    @contextmanager
    def transaction(self):
        """Everything added inside the block is rolled back on exit."""
        m = self.mark()
        try:
            yield self
        finally:
            self.rollback(m)

    def retract_derived(self) -> None:
        base = [f for f in self._log if f not in self._derived]
        self.rollback((0, None, self._epoch))
        self._epoch += 1
        for f in base:
            self.add(f)

    def copy(self) -> "FactStore":
        out = FactStore()
        out._log = list(self._log)
        out._facts = set(self._facts)
        out._derived = set(self._derived)
        for name in ("by_property", "by_property_object", "by_subject_property", "by_class", "classes_of"):
            setattr(out, name, {k: set(v) for k, v in getattr(self, name).items()})
        out.closed_at = self.closed_at
        return out

    def derived_facts(self) -> frozenset[Fact]:
        return frozenset(self._derived)

    # queries used by the matcher

    def objects(self, subject: Individual, prop: str) -> set[Individual]:
        return self.by_subject_property.get((subject, prop), set())

    def subjects(self, prop: str, obj: Individual) -> set[Individual]:
        return self.by_property_object.get((prop, obj), set())

    def pairs(self, prop: str) -> set[tuple[Individual, Individual]]:
        return self.by_property.get(prop, set())

    def instances(self, classes: Iterable[str]) -> set[Individual]:
        out: set[Individual] = set()
        for c in classes:
            out |= self.by_class.get(c, set())
        return out

    def has_class(self, instance: Individual, classes: frozenset[str]) -> bool:
        own = self.classes_of.get(instance)
        return bool(own) and not own.isdisjoint(classes)


@dataclass(frozen=True)
class Verdict:
    rule: str
    kind: VerdictKind
    bindings: tuple[tuple[str, Individual], ...]

    @property
    def binding_map(self) -> dict[str, Individual]:
        return dict(self.bindings)


# compiled program ------------------------------------------------------


class _CAtom:
    """Rule atom with its class pattern expanded to the matching class set."""

    __slots__ = ("atom", "pred", "is_class", "classes", "terms")

    def __init__(self, kb: KnowledgeBase, atom: Atom):
        self.atom = atom
        self.pred = atom.predicate
        self.is_class = atom.is_class_atom
        self.classes = kb.subclasses_of(atom.predicate) if self.is_class else frozenset()
        self.terms = atom.args

    def sources(self) -> frozenset[str]:
        return self.classes if self.is_class else frozenset((self.pred,))


# Join plans.  Variables live in numbered slots of a list; a term is
# compiled to (slot, constant) with slot -1 for constants.
_C_CHECK, _C_SCAN, _P_CHECK, _P_OBJ, _P_SUBJ, _P_ALL = range(6)


class _Step:
    __slots__ = ("op", "pred", "classes", "s", "sc", "o", "oc", "same")

    def __init__(self, op, atom: _CAtom, s, sc, o=-1, oc=None):
        self.op, self.pred, self.classes = op, atom.pred, atom.classes
        self.s, self.sc, self.o, self.oc = s, sc, o, oc
        self.same = o >= 0 and o == s


class _CRule:
    __slots__ = ("rule", "name", "body", "negated", "head", "stratum", "slots", "head_terms", "plans", "checks")

    def __init__(self, kb: KnowledgeBase, rule: Rule):
        self.rule = rule
        self.name = rule.name
        self.body = [_CAtom(kb, a) for a in rule.body]
        self.negated = [_CAtom(kb, a) for a in rule.negated]
        self.head = rule.head
        self.stratum = 0
        self.slots: list[str] = []
        for a in rule.body:
            for t in a.args:
                if isinstance(t, Var) and t.name not in self.slots:
                    self.slots.append(t.name)
        self.head_terms = [self._term(t) for t in rule.head.args] if rule.head is not None else []
        self.checks = [self._step(a, set(range(len(self.slots)))) for a in self.negated]
        self.plans = {None: self._plan(None)}
        for i in range(len(self.body)):
            self.plans[i] = self._plan(i)

    def _term(self, t) -> tuple[int, object]:
        return (self.slots.index(t.name), None) if isinstance(t, Var) else (-1, t)

    def _step(self, a: _CAtom, bound: set[int]) -> _Step:
        (s, sc) = self._term(a.terms[0])
        s_known = s < 0 or s in bound
        if a.is_class:
            return _Step(_C_CHECK if s_known else _C_SCAN, a, s, sc)
        (o, oc) = self._term(a.terms[1])
        o_known = o < 0 or o in bound
        if s_known and o_known:
            op = _P_CHECK
        elif s_known:
            op = _P_OBJ
        elif o_known:
            op = _P_SUBJ
        else:
            op = _P_ALL
        return _Step(op, a, s, sc, o, oc)

    def _plan(self, seed: Optional[int]) -> list[_Step]:
        """Greedy static order: checks first, then lookups with a bound end, then scans."""
        bound: set[int] = set()
        rest = list(range(len(self.body)))
        if seed is not None:
            rest.remove(seed)
            bound |= {self.slots.index(t.name) for t in self.body[seed].terms if isinstance(t, Var)}
        cost = {_C_CHECK: 0, _P_CHECK: 0, _P_OBJ: 1, _P_SUBJ: 1, _C_SCAN: 2, _P_ALL: 3}
        steps = []
        while rest:
            best = min(rest, key=lambda i: (cost[self._step(self.body[i], bound).op], i))
            rest.remove(best)
            steps.append(self._step(self.body[best], bound))
            bound |= {self.slots.index(t.name) for t in self.body[best].terms if isinstance(t, Var)}
        return steps

    def bindings(self, env: tuple) -> dict:
        return dict(zip(self.slots, env))


def _inverse_rules(kb: KnowledgeBase) -> list[Rule]:
    out = []
    for p in kb.properties:
        if p.inverse is not None and p.inverse in kb.property_map:
            x, y = Var("x"), Var("y")
            out.append(
                Rule(f"inverse_{p.name}", RuleKind.INFERENCE, (Atom(p.name, (x, y)),), (), Atom(p.inverse, (y, x)))
            )
    return out


@dataclass
class Program:
    strata: list[list[_CRule]]
    constraints: list[_CRule]
    unsafe: frozenset[str]
    nonmonotone: frozenset[str]
    triggers: dict[str, list[tuple[_CRule, int]]]
    # triggers restricted to the rules of each stratum
    stratum_triggers: list[dict[str, list[tuple[_CRule, int]]]]


def stratify(kb: KnowledgeBase) -> Program:
    """Compile and stratify ``kb``'s rules (cached on the KB)."""
    cached = kb._cache.get("program")
    if cached is not None:
        return cached
    inference = [_CRule(kb, r) for r in list(kb.rules) + _inverse_rules(kb) if r.kind is RuleKind.INFERENCE]
    constraints = [_CRule(kb, r) for r in kb.rules if r.kind is RuleKind.CONSTRAINT]

    g = nx.DiGraph()
    negative_sources: set[str] = set()
    for cr in inference:
        h = cr.head.predicate
        g.add_node(h)
        for a in cr.body:
            for src in a.sources():
                if not g.has_edge(src, h):
                    g.add_edge(src, h, neg=False, rules=set())
                g[src][h]["rules"].add(cr.name)
        for a in cr.negated:
            for src in a.sources():
                negative_sources.add(src)
                if not g.has_edge(src, h):
                    g.add_edge(src, h, neg=False, rules=set())
                g[src][h]["neg"] = True
                g[src][h]["rules"].add(cr.name)

    comp_of: dict[str, int] = {}
    components = list(nx.strongly_connected_components(g))
    for idx, comp in enumerate(components):
        for n in comp:
            comp_of[n] = idx
    for u, v, data in g.edges(data=True):
        if data["neg"] and comp_of[u] == comp_of[v]:
            members = components[comp_of[u]]
            rules = sorted(
                {r for a, b, d in g.edges(data=True) if a in members and b in members for r in d["rules"]}
            )
            raise StratificationError(rules)

    cond = nx.condensation(g, components)
    level = {c: 0 for c in cond.nodes}
    for c in nx.topological_sort(cond):
        for u in components[c]:
            for v in g.successors(u):
                cv = comp_of[v]
                if cv == c:
                    continue
                step = 1 if g[u][v]["neg"] else 0
                level[cv] = max(level[cv], level[c] + step)
    pred_level = {n: level[comp_of[n]] for n in g.nodes}
    for cr in inference:
        cr.stratum = pred_level[cr.head.predicate]
    depth = max((cr.stratum for cr in inference), default=-1) + 1
    strata: list[list[_CRule]] = [[] for _ in range(depth)]
    for cr in sorted(inference, key=lambda r: r.name):
        strata[cr.stratum].append(cr)

    unsafe = {n for n in g.nodes if any(nx.has_path(g, n, t) for t in negative_sources if t in g)}
    # predicates whose derived facts may rest on a negated atom
    nonmonotone: set[str] = set()
    for cr in inference:
        if cr.negated:
            h = cr.head.predicate
            nonmonotone |= {h} | nx.descendants(g, h)
    triggers: dict[str, list[tuple[_CRule, int]]] = {}
    for cr in inference:
        for i, a in enumerate(cr.body):
            for src in a.sources():
                triggers.setdefault(src, []).append((cr, i))
    stratum_triggers: list[dict[str, list[tuple[_CRule, int]]]] = [{} for _ in strata]
    for pred, hits in triggers.items():
        for cr, i in hits:
            stratum_triggers[cr.stratum].setdefault(pred, []).append((cr, i))
    program = Program(
        strata,
        sorted(constraints, key=lambda r: r.name),
        frozenset(unsafe),
        frozenset(nonmonotone),
        triggers,
        stratum_triggers,
    )
    kb._cache["program"] = program
    return program


# matching --------------------------------------------------------------


def _holds(store: FactStore, st: _Step, env: list) -> bool:
    s = env[st.s] if st.s >= 0 else st.sc
    if st.op == _C_CHECK:
        return store.has_class(s, st.classes)
    o = env[st.o] if st.o >= 0 else st.oc
    return o in store.objects(s, st.pred)


def _run(store: FactStore, steps: list[_Step], k: int, env: list, checks: list[_Step], out: list) -> None:
    # Solutions are collected before any is emitted, so iterating live index sets is safe.
    if k == len(steps):
        for c in checks:
            if _holds(store, c, env):
                return
        out.append(tuple(env))
        return
    st = steps[k]
    op = st.op
    if op == _C_CHECK or op == _P_CHECK:
        if _holds(store, st, env):
            _run(store, steps, k + 1, env, checks, out)
    elif op == _C_SCAN:
        for v in store.instances(st.classes):
            env[st.s] = v
            _run(store, steps, k + 1, env, checks, out)
        env[st.s] = None
    elif op == _P_OBJ:
        s = env[st.s] if st.s >= 0 else st.sc
        for v in store.objects(s, st.pred):
            env[st.o] = v
            _run(store, steps, k + 1, env, checks, out)
        env[st.o] = None
    elif op == _P_SUBJ:
        o = env[st.o] if st.o >= 0 else st.oc
        for v in store.subjects(st.pred, o):
            env[st.s] = v
            _run(store, steps, k + 1, env, checks, out)
        env[st.s] = None
    else:
        for sv, ov in store.pairs(st.pred):
            if st.same and sv != ov:
                continue
            env[st.s] = sv
            env[st.o] = ov
            _run(store, steps, k + 1, env, checks, out)
        env[st.s] = env[st.o] = None


def _seed(cr: _CRule, i: int, fact: Fact) -> Optional[list]:
    a = cr.body[i]
    if a.is_class:
        if not isinstance(fact, ClassAssertion) or fact.cls not in a.classes:
            return None
        values = (fact.instance,)
    else:
        if not isinstance(fact, PropertyAssertion) or fact.property != a.pred:
            return None
        values = (fact.subject, fact.object)
    env: list = [None] * len(cr.slots)
    for t, v in zip(a.terms, values):
        if isinstance(t, Var):
            slot = cr.slots.index(t.name)
            if env[slot] is not None and env[slot] != v:
                return None
            env[slot] = v
        elif t != v:
            return None
    return env


def _solutions(store: FactStore, cr: _CRule, seed: Optional[tuple[int, Fact]] = None) -> list[tuple]:
    """Satisfying slot environments of ``cr``'s body, optionally seeded with one body fact."""
    out: list[tuple] = []
    if seed is None:
        _run(store, cr.plans[None], 0, [None] * len(cr.slots), cr.checks, out)
    else:
        env = _seed(cr, seed[0], seed[1])
        if env is not None:
            _run(store, cr.plans[seed[0]], 0, env, cr.checks, out)
    return out


def _instantiate(cr: _CRule, env: tuple) -> Fact:
    args = [env[slot] if slot >= 0 else const for slot, const in cr.head_terms]
    if len(args) == 1:
        return ClassAssertion(args[0], cr.head.predicate)
    return PropertyAssertion(args[0], cr.head.predicate, args[1])


# public operations -----------------------------------------------------


def complete_inverses(store: FactStore, kb: KnowledgeBase) -> int:
    """Add the inverse of every property fact whose property declares one."""
    props = kb.property_map
    added = 0
    for fact in list(store):
        if isinstance(fact, PropertyAssertion):
            p = props.get(fact.property)
            if p is not None and p.inverse is not None:
                added += store.add(PropertyAssertion(fact.object, p.inverse, fact.subject))
    return added


def can_extend(store: FactStore, kb: KnowledgeBase, predicates: Iterable[str]) -> bool:
    """Whether adding facts of ``predicates`` to the closed ``store`` keeps every derived fact valid.

    That fails only when a new fact feeds a negated atom and the store
    already holds a fact derived through negation.
    """
    program = stratify(kb)
    if not any(p in program.unsafe for p in predicates):
        return True
    return not any(predicate_of(f) in program.nonmonotone for f in store._derived)


def infer_to_fixpoint(store: FactStore, kb: KnowledgeBase, trace: Optional[Trace] = None) -> int:
    """Close ``store`` under the KB's inference rules; returns facts derived.

    A store closed by an earlier call is extended incrementally from the
    facts added since.  When :func:`can_extend` says that is unsound, all
    derived facts are dropped and recomputed, which also invalidates any
    open :meth:`FactStore.mark`.
    """
    program = stratify(kb)
    full = store.closed_at is None
    since = 0
    if not full:
        since = store.closed_at
        fresh = store.facts_since(since)
        preds = {predicate_of(f) for f in fresh}
        if not preds & program.triggers.keys():
            store.closed_at = store.generation
            return 0
        if not can_extend(store, kb, preds):
            store.retract_derived()
            full = True
    derived = 0

    def emit(cr: _CRule, env: tuple, out: list[Fact]) -> None:
        nonlocal derived
        fact = _instantiate(cr, env)
        if store.add(fact, derived=True):
            derived += 1
            out.append(fact)
            if trace is not None:
                trace(cr.name, cr.bindings(env), fact)

    for stratum, local in zip(program.strata, program.stratum_triggers):
        new: list[Fact] = []
        if full:
            for cr in stratum:
                for env in _solutions(store, cr):
                    emit(cr, env, new)
        else:
            new = _semi_naive_round(store, local, store.facts_since(since), emit)
        while new:
            new = _semi_naive_round(store, local, new, emit)
    store.closed_at = store.generation
    return derived


def _semi_naive_round(store, triggers: dict, delta: list[Fact], emit) -> list[Fact]:
    """Re-evaluate only rules a delta fact can match.

    A rule hit once is joined from that fact; a rule hit several times is
    evaluated once in full, which is cheaper than one join per seed.
    """
    seeds: dict[_CRule, Optional[tuple[int, Fact]]] = {}
    for fact in delta:
        for cr, i in triggers.get(predicate_of(fact), ()):
            # None marks a rule hit more than once
            seeds[cr] = (i, fact) if cr not in seeds else None
    out: list[Fact] = []
    for cr, seed in seeds.items():
        for env in _solutions(store, cr, seed):
            emit(cr, env, out)
    return out


def check_constraints(store: FactStore, kb: KnowledgeBase) -> list[Verdict]:
    """One verdict per distinct satisfying binding of each constraint rule."""
    program = stratify(kb)
    out: list[Verdict] = []
    for cr in program.constraints:
        seen = set()
        for env in _solutions(store, cr):
            key = tuple(sorted(zip(cr.slots, env)))
            if key not in seen:
                seen.add(key)
                out.append(Verdict(cr.name, cr.rule.verdict, key))
    out.sort(key=lambda v: (v.rule, [(k, str(x)) for k, x in v.bindings]))
    return out


def rule_index(kb: KnowledgeBase) -> dict[str, Rule]:
    return {r.name: r for r in list(kb.rules) + _inverse_rules(kb)}
