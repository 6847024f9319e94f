"""Seeded random graphs and queries for differential testing.

Queries are grown as a tree of groups.  A child group (an OPTIONAL block)
reuses at least one variable of its parent group and otherwise only fresh
variables, which keeps the query well designed by construction.  The other
classes are derived from such trees: a forced cycle, a slave side restricted
to a single join variable, a deliberate well-designedness violation, or a root
pattern that cannot match anything.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .dictionary import Term, TermTriple
from .errors import UnsupportedFeatureError
from .plan import check_well_designed, make_plan
from .query import parse_query

EX = "http://example.org/"
CLASSES = ("acyclic-wd", "cyclic", "cyclic-single-jvar-slave", "nwd", "early-abort")

MAX_TPS = 8
MAX_DEPTH = 3


def random_graph(rng: random.Random, entities: int = 10, predicates: int = 4, max_triples: int = 60) -> list[TermTriple]:
    ents = [Term.iri(f"{EX}e{i}") for i in range(entities)]
    preds = [Term.iri(f"{EX}p{i}") for i in range(predicates)]
    lits = [Term.literal(f"v{i}") for i in range(3)]
    n = rng.randint(max_triples // 3, max_triples)
    out: dict[TermTriple, None] = {}
    for _ in range(n):
        o = rng.choice(lits) if rng.random() < 0.05 else rng.choice(ents)
        out[(rng.choice(ents), rng.choice(preds), o)] = None
    return list(out)


def graph_to_nt(graph: list[TermTriple]) -> str:
    return "".join(f"{s.n3()} {p.n3()} {o.n3()} .\n" for s, p, o in graph)


@dataclass
class Group:
    patterns: list[tuple[str, str, str]] = field(default_factory=list)
    children: list["Group"] = field(default_factory=list)
    split: int = 0  # >0: render patterns[:split] and patterns[split:] as joined peer groups

    def variables(self) -> list[str]:
        out: list[str] = []
        for tp in self.patterns:
            out += [x for x in tp if x.startswith("?") and x not in out]
        return out

    def count(self) -> int:
        return len(self.patterns) + sum(c.count() for c in self.children)


class _Builder:
    def __init__(self, rng: random.Random, entities: int, predicates: int):
        self.rng = rng
        self.entities = entities
        self.predicates = predicates
        self.fresh = 0
        self.budget = rng.randint(2, MAX_TPS)

    def new_var(self) -> str:
        self.fresh += 1
        return f"?v{self.fresh}"

    def const(self) -> str:
        return f"<{EX}e{self.rng.randrange(self.entities)}>"

    def pred(self) -> str:
        return f"<{EX}p{self.rng.randrange(self.predicates)}>"

    def pred_var(self) -> str:
        self.fresh += 1
        return f"?pv{self.fresh}"

    def pattern(self, anchor: str, extra: list[str] | None = None) -> tuple[str, str, str]:
        """A pattern containing ``anchor``; the other end is fresh, reused, or a constant."""
        rng = self.rng
        r = rng.random()
        if extra and r < 0.5:
            other = rng.choice(extra)
        elif r < 0.7:
            other = self.new_var()
        elif r < 0.9:
            other = self.const()
        else:
            other = None
        if other is None:
            # constant on both other positions, sometimes with a predicate variable
            if rng.random() < 0.5:
                if rng.random() < 0.5:
                    return (anchor, self.pred_var(), self.const())
                return (self.const(), self.pred_var(), anchor)
            other = self.const()
        if other == anchor:
            other = self.new_var()
        return (anchor, self.pred(), other) if rng.random() < 0.5 else (other, self.pred(), anchor)

    def group(self, parent_vars: list[str], depth: int, size: int) -> Group:
        rng = self.rng
        g = Group()
        local: list[str] = []
        if parent_vars:
            anchors = [rng.choice(parent_vars)]
        else:
            anchors = [self.new_var()]
        for i in range(size):
            anchor = rng.choice(anchors + local) if (local and i) else anchors[0]
            tp = self.pattern(anchor, [v for v in local if v != anchor] if i else None)
            g.patterns.append(tp)
            for x in tp:
                if x.startswith("?v") and x not in local:
                    local.append(x)
        self.budget -= size
        if depth < MAX_DEPTH:
            while self.budget > 0 and rng.random() < 0.6:
                n = rng.randint(1, min(3, self.budget))
                g.children.append(self.group(local, depth + 1, n))
        if len(g.patterns) >= 2 and rng.random() < 0.3:
            g.split = rng.randint(1, len(g.patterns) - 1)
        return g


def _render_tp(tp: tuple[str, str, str]) -> str:
    return " ".join(tp) + " ."


def render_group(g: Group, level: int = 0) -> str:
    pad = "  " * (level + 1)
    lines = ["{"]
    children = list(g.children)
    parts = [g.patterns]
    if g.split:
        halves = [g.patterns[: g.split], g.patterns[g.split:]]
        if all(_connected_tps(h) for h in halves) and set(_vars(halves[0])) & set(_vars(halves[1])):
            parts = halves
    if len(parts) == 2:
        for part in parts:
            pv = set(_vars(part))
            mine = [c for c in children if set(_anchor_vars(c, g)) <= pv]
            children = [c for c in children if c not in mine]
            lines.append(pad + render_group(Group(part, mine), level + 1))
    else:
        lines += [pad + _render_tp(tp) for tp in g.patterns]
    for c in children:
        lines.append(pad + "OPTIONAL " + render_group(c, level + 1))
    lines.append("  " * level + "}")
    return "\n".join(lines)


def _vars(tps) -> list[str]:
    out: list[str] = []
    for tp in tps:
        out += [x for x in tp if x.startswith("?") and x not in out]
    return out


def _anchor_vars(child: Group, parent: Group) -> list[str]:
    pv = set(parent.variables())

    def walk(g: Group) -> list[str]:
        return [v for v in g.variables() if v in pv] + [v for c in g.children for v in walk(c)]

    return walk(child)


def _connected_tps(tps) -> bool:
    tps = list(tps)
    if not tps:
        return False
    seen = {0}
    changed = True
    while changed:
        changed = False
        for i, tp in enumerate(tps):
            if i not in seen and any(set(_vars([tp])) & set(_vars([tps[j]])) for j in seen):
                seen.add(i)
                changed = True
    return len(seen) == len(tps)


def render_query(root: Group) -> str:
    return f"PREFIX : <{EX}>\nSELECT * WHERE " + render_group(root)


@dataclass
class GeneratedCase:
    seed: int
    cls: str
    graph: list[TermTriple]
    query: str

    @property
    def ntriples(self) -> str:
        return graph_to_nt(self.graph)


def _make_cycle(b: _Builder, root: Group) -> None:
    """Close a cycle: a triangle over fresh variables joined to the root, or a two-variable reuse."""
    rv = [v for v in root.variables() if v.startswith("?v")]
    if len(rv) >= 2 and b.rng.random() < 0.5:
        x, y = b.rng.sample(rv, 2)
        root.patterns.append((x, b.pred(), y))
    else:
        a = b.rng.choice(rv) if rv else b.new_var()
        c, d = b.new_var(), b.new_var()
        root.patterns += [(a, b.pred(), c), (c, b.pred(), d), (d, b.pred(), a)]


def _single_jvar_children(b: _Builder, root: Group) -> None:
    """Replace the root's children by star groups hanging off one root variable each."""
    rng = b.rng
    root.children = []
    budget = MAX_TPS - len(root.patterns)
    while budget > 0 and rng.random() < 0.8:
        anchor = rng.choice(root.variables())
        n = rng.randint(1, min(2, budget))
        child = Group()
        for _ in range(n):
            other = b.new_var() if rng.random() < 0.6 else b.const()
            child.patterns.append((anchor, b.pred(), other) if rng.random() < 0.5 else (other, b.pred(), anchor))
        budget -= n
        if budget > 0 and rng.random() < 0.3:
            grand = Group([(anchor, b.pred(), b.new_var())])
            child.children.append(grand)
            budget -= 1
        root.children.append(child)


def _break_wd(b: _Builder, root: Group) -> bool:
    """Give a later sibling a variable that only an earlier OPTIONAL block binds."""
    holders = [c for c in root.children if set(c.variables()) - set(root.variables())]
    if not holders:
        return False
    first = holders[0]
    private = [v for v in first.variables() if v not in root.variables()]
    v = b.rng.choice(private)
    sibling = Group([(v, b.pred(), b.new_var()) if b.rng.random() < 0.5 else (b.new_var(), b.pred(), v)])
    root.children.insert(root.children.index(first) + 1, sibling)
    return True


def _plan_ok(text: str):
    try:
        return make_plan(parse_query(text))
    except UnsupportedFeatureError:
        return None


def generate_case(seed: int, cls: str, entities: int = 7, predicates: int = 3, max_triples: int = 60) -> GeneratedCase:
    """Deterministic (graph, query) pair of the requested class."""
    if cls not in CLASSES:
        raise ValueError(f"unknown query class {cls!r}; choose from {', '.join(CLASSES)}")
    rng = random.Random(f"{cls}:{seed}")
    graph = random_graph(rng, entities, predicates, max_triples)
    for _ in range(1000):
        b = _Builder(rng, entities, predicates)
        root = b.group([], 0, rng.randint(1, min(3, b.budget)))
        if cls in ("cyclic", "cyclic-single-jvar-slave"):
            _make_cycle(b, root)
            if cls == "cyclic-single-jvar-slave":
                _single_jvar_children(b, root)
        if cls == "nwd" and not _break_wd(b, root):
            continue
        if root.count() > MAX_TPS:
            continue
        if cls == "early-abort":
            i = rng.randrange(len(root.patterns))
            s, _, o = root.patterns[i]
            root.patterns[i] = (s, f"<{EX}absent>", o)
        text = render_query(root)
        plan = _plan_ok(text)
        if plan is None or not _matches_class(plan, cls):
            continue
        return GeneratedCase(seed, cls, graph, text)
    raise RuntimeError(f"could not generate a {cls} query for seed {seed}")


def _matches_class(plan, cls: str) -> bool:
    wd = not plan.violations
    if cls == "acyclic-wd":
        return wd and not plan.cyclic
    if cls == "cyclic":
        return wd and plan.cyclic
    if cls == "cyclic-single-jvar-slave":
        jset = set(plan.goj.jvars)
        if not (wd and plan.cyclic):
            return False
        slaves = [tps for sn, tps in plan.gosn.supernodes if sn not in plan.absolute]
        return bool(slaves) and all(
            len({v for t in tps for v in plan.patterns[t].variables() if v in jset}) == 1 for tps in slaves)
    if cls == "nwd":
        return bool(check_well_designed(plan.query.ast))
    if cls == "early-abort":
        return wd
    return False

