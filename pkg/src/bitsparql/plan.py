"""Query planning: graph of supernodes, join-variable graphs and jvar orders.

A supernode wraps one OPT-free BGP leaf of the join tree.  Left-outer-joins
become directed (master -> slave) edges between the leftmost leaves of both
sides, inner joins become bidirectional (peer) edges.  Peer-connected
supernodes form one *class*; the directed edges arrange classes in a tree
whose root is the class of absolute masters.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx

from .errors import CartesianProductError
from .query import Bgp, Join, LeftJoin, Node, Query, TriplePattern, iter_nodes, leaves, leftmost, node_variables, render


class Relation(enum.Enum):
    MASTER = "master"
    SLAVE = "slave"
    PEER = "peer"
    UNRELATED = "unrelated"


@dataclass
class GoSN:
    supernodes: list[tuple[int, tuple[int, ...]]]
    uni_edges: set[tuple[int, int]] = field(default_factory=set)
    bi_edges: set[tuple[int, int]] = field(default_factory=set)

    def copy(self) -> "GoSN":
        return GoSN(list(self.supernodes), set(self.uni_edges), set(self.bi_edges))

    @property
    def sn_ids(self) -> list[int]:
        return [sn for sn, _ in self.supernodes]

    def tps_of(self, sn: int) -> tuple[int, ...]:
        return dict(self.supernodes)[sn]

    def sn_of_tp(self) -> dict[int, int]:
        return {tp: sn for sn, tps in self.supernodes for tp in tps}

    def _reach(self, start: int) -> dict[int, bool]:
        """Supernodes reachable from ``start``; value says whether a uni edge was used."""
        out_uni: dict[int, list[int]] = {}
        out_bi: dict[int, list[int]] = {}
        for a, b in self.uni_edges:
            out_uni.setdefault(a, []).append(b)
        for a, b in self.bi_edges:
            out_bi.setdefault(a, []).append(b)
            out_bi.setdefault(b, []).append(a)
        seen = {(start, False)}
        queue = deque(seen)
        while queue:
            node, used = queue.popleft()
            for nxt in out_bi.get(node, []):
                if (nxt, used) not in seen:
                    seen.add((nxt, used))
                    queue.append((nxt, used))
            for nxt in out_uni.get(node, []):
                if (nxt, True) not in seen:
                    seen.add((nxt, True))
                    queue.append((nxt, True))
        reach: dict[int, bool] = {}
        for node, used in seen:
            reach[node] = reach.get(node, False) or used
        return reach

    def classify(self, x: int, y: int) -> Relation:
        if x == y:
            return Relation.PEER
        rx = self._reach(x)
        if rx.get(y):
            return Relation.MASTER
        if self._reach(y).get(x):
            return Relation.SLAVE
        if y in rx:
            return Relation.PEER
        return Relation.UNRELATED

    def absolute_masters(self) -> set[int]:
        dominated: set[int] = set()
        for sn in self.sn_ids:
            dominated |= {n for n, used in self._reach(sn).items() if used and n != sn}
        return set(self.sn_ids) - dominated

    def peer_classes(self) -> list[list[int]]:
        parent = {sn: sn for sn in self.sn_ids}

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.bi_edges:
            parent[find(a)] = find(b)
        groups: dict[int, list[int]] = {}
        for sn in self.sn_ids:
            groups.setdefault(find(sn), []).append(sn)
        return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])

    def undirected_path(self, a: int, b: int) -> list[tuple[int, int]]:
        """Edges (as stored) on the unique undirected path between two supernodes."""
        adj: dict[int, list[tuple[int, tuple[int, int]]]] = {}
        for e in self.uni_edges | self.bi_edges:
            adj.setdefault(e[0], []).append((e[1], e))
            adj.setdefault(e[1], []).append((e[0], e))
        prev: dict[int, tuple[int, tuple[int, int]] | None] = {a: None}
        queue = deque([a])
        while queue:
            node = queue.popleft()
            if node == b:
                break
            for nxt, e in adj.get(node, []):
                if nxt not in prev:
                    prev[nxt] = (node, e)
                    queue.append(nxt)
        if b not in prev:
            return []
        path = []
        node = b
        while prev[node] is not None:
            node, e = prev[node]  # type: ignore[misc]
            path.append(e)
        return path[::-1]


def _leaf_ids(ast: Node) -> dict[Bgp, int]:
    return {leaf: i for i, leaf in enumerate(leaves(ast))}


def build_gosn(ast: Node) -> GoSN:
    ids = _leaf_ids(ast)
    g = GoSN([(i, tuple(tp.id for tp in leaf.patterns)) for leaf, i in ids.items()])
    for node in iter_nodes(ast):
        if isinstance(node, LeftJoin):
            g.uni_edges.add((ids[leftmost(node.left)], ids[leftmost(node.right)]))
        elif isinstance(node, Join):
            a, b = ids[leftmost(node.left)], ids[leftmost(node.right)]
            g.bi_edges.add((min(a, b), max(a, b)))
    return g


@dataclass(frozen=True)
class Violation:
    violating: int
    counterpart: int
    variable: str


def check_well_designed(ast: Node) -> list[Violation]:
    """Empty list iff the query is well designed."""
    ids = _leaf_ids(ast)
    all_leaves = list(ids)
    found: list[Violation] = []
    for node in iter_nodes(ast):
        if not isinstance(node, LeftJoin):
            continue
        inside = set(leaves(node))
        outside = [leaf for leaf in all_leaves if leaf not in inside]
        left_vars = set(node_variables(node.left))
        outside_vars = {v for leaf in outside for v in node_variables(leaf)}
        for v in node_variables(node.right):
            if v in outside_vars and v not in left_vars:
                for z in leaves(node.right):
                    if v in node_variables(z):
                        for x in outside:
                            if v in node_variables(x):
                                viol = Violation(ids[z], ids[x], v)
                                if viol not in found and Violation(ids[x], ids[z], v) not in found:
                                    found.append(viol)
    return found


def transform_nwd(gosn: GoSN, violations: Iterable[Violation]) -> GoSN:
    """Turn every directed edge on each violation pair's path into a peer edge."""
    g = gosn.copy()
    for viol in violations:
        for e in g.undirected_path(viol.violating, viol.counterpart):
            if e in g.uni_edges:
                g.uni_edges.discard(e)
                g.bi_edges.add((min(e), max(e)))
    return g


def convert_left_joins(ast: Node, gosn: GoSN) -> Node:
    """Rewrite the join tree so every LeftJoin whose edge is now bidirectional is an inner Join."""
    ids = _leaf_ids(ast)

    def walk(node: Node) -> Node:
        if isinstance(node, Bgp):
            return node
        left, right = walk(node.left), walk(node.right)
        if isinstance(node, LeftJoin):
            edge = (ids[leftmost(node.left)], ids[leftmost(node.right)])
            if edge not in gosn.uni_edges:
                return Join(left, right)
            return LeftJoin(left, right)
        return Join(left, right)

    return walk(ast)


def jvar_names(patterns: Iterable[TriplePattern]) -> list[str]:
    counts: dict[str, int] = {}
    for tp in patterns:
        for v in tp.variables():
            counts[v] = counts.get(v, 0) + 1
    return [v for v, n in counts.items() if n >= 2]


@dataclass
class GoJ:
    """Graph of join variables.

    Kept as a multigraph: each triple pattern holding two jvars contributes its
    own edge, so two patterns over the same jvar pair form a 2-cycle.
    """

    jvars: list[str]
    occurrences: dict[str, list[int]]
    edges: list[tuple[str, str, int]]

    def neighbours(self, jvar: str) -> set[str]:
        out = set()
        for a, b, _ in self.edges:
            if a == jvar:
                out.add(b)
            elif b == jvar:
                out.add(a)
        return out


def build_goj(patterns: Iterable[TriplePattern]) -> GoJ:
    patterns = list(patterns)
    jvars = jvar_names(patterns)
    occ = {j: [tp.id for tp in patterns if j in tp.variables()] for j in jvars}
    edges = []
    for tp in patterns:
        js = [v for v in tp.variables() if v in occ]
        if len(js) == 2:
            edges.append((js[0], js[1], tp.id))
    return GoJ(jvars, occ, edges)


def is_cyclic(goj: GoJ) -> bool:
    parent = {j: j for j in goj.jvars}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b, _ in goj.edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return True
        parent[ra] = rb
    return False


def build_got(patterns: Iterable[TriplePattern]) -> nx.MultiGraph:
    """Graph of triple patterns with redundant same-jvar cliques collapsed to stars.

    For each jvar, the patterns containing it are linked to the lowest-id one.
    """
    patterns = list(patterns)
    g = nx.MultiGraph()
    g.add_nodes_from(tp.id for tp in patterns)
    for j in jvar_names(patterns):
        holders = [tp.id for tp in patterns if j in tp.variables()]
        for other in holders[1:]:
            g.add_edge(holders[0], other, jvar=j)
    return g


def got_has_cycle(got: nx.MultiGraph) -> bool:
    # A forest has exactly |V| - #components edges.
    return got.number_of_edges() > got.number_of_nodes() - nx.number_connected_components(got)


def _connected(patterns: list[TriplePattern]) -> bool:
    if len(patterns) <= 1:
        return True
    g = nx.Graph()
    g.add_nodes_from(tp.id for tp in patterns)
    for i, a in enumerate(patterns):
        va = set(a.variables())
        for b in patterns[i + 1:]:
            if va & set(b.variables()):
                g.add_edge(a.id, b.id)
    return nx.is_connected(g)


class JvarOrder:
    """Bottom-up and top-down jvar sequences (segments kept for reporting)."""

    def __init__(self, greedy: bool, bu_segments: list[list[str]], td_segments: list[list[str]]):
        self.greedy = greedy
        self.bu_segments = bu_segments
        self.td_segments = td_segments

    @property
    def order_bu(self) -> list[str]:
        return [j for seg in self.bu_segments for j in seg]

    @property
    def order_td(self) -> list[str]:
        return [j for seg in self.td_segments for j in seg]

    def __repr__(self) -> str:
        kind = "greedy" if self.greedy else "tree"
        return f"JvarOrder({kind}, bu={self.bu_segments}, td={self.td_segments})"


def rank_jvar_selectivity(goj: GoJ, tp_counts: Mapping[int, int]) -> list[str]:
    """Jvars from most to least selective.

    A jvar is more selective when the sorted vector of triple counts of the
    patterns holding it is lexicographically smaller; names break ties.
    """
    return sorted(goj.jvars, key=lambda j: (sorted(tp_counts[t] for t in goj.occurrences[j]), j))


@dataclass
class Plan:
    """Everything derived from the query text before any BitMat is loaded."""

    query: Query
    ast: Node  # after any non-well-designed conversion
    gosn: GoSN
    violations: list[Violation]
    goj: GoJ
    cyclic: bool
    classes: list[list[int]]  # peer classes of supernodes
    class_of_sn: dict[int, int]
    class_parent: dict[int, int | None]
    sn_of_tp: dict[int, int]
    absolute: set[int]

    @property
    def patterns(self) -> tuple[TriplePattern, ...]:
        return self.query.patterns

    def tps_of_class(self, c: int) -> list[int]:
        return sorted(tp for sn in self.classes[c] for tp in self.gosn.tps_of(sn))

    def class_of_tp(self, tp: int) -> int:
        return self.class_of_sn[self.sn_of_tp[tp]]

    def root_class(self) -> int:
        return next(c for c, p in self.class_parent.items() if p is None)

    def ancestors(self, c: int) -> list[int]:
        out = []
        p = self.class_parent[c]
        while p is not None:
            out.append(p)
            p = self.class_parent[p]
        return out

    def is_master_tp(self, master: int, slave: int) -> bool:
        """Whether ``master``'s class is a proper ancestor of ``slave``'s class."""
        return self.class_of_tp(master) in self.ancestors(self.class_of_tp(slave))

    def related(self, a: int, b: int) -> bool:
        """Same class, or one tp's class is an ancestor of the other's."""
        ca, cb = self.class_of_tp(a), self.class_of_tp(b)
        return ca == cb or ca in self.ancestors(cb) or cb in self.ancestors(ca)

    def is_absolute_tp(self, tp: int) -> bool:
        return self.sn_of_tp[tp] in self.absolute

    def class_order(self, tp_counts: Mapping[int, int]) -> list[int]:
        """Classes masters-first; among available siblings the one with the most selective tp first."""
        children: dict[int, list[int]] = {}
        for c, p in self.class_parent.items():
            if p is not None:
                children.setdefault(p, []).append(c)

        def key(c: int) -> tuple:
            return (min(tp_counts[t] for t in self.tps_of_class(c)), min(self.classes[c]))

        order = [self.root_class()]
        available = list(children.get(order[0], []))
        while available:
            available.sort(key=key)
            nxt = available.pop(0)
            order.append(nxt)
            available.extend(children.get(nxt, []))
        return order


def make_plan(query: Query) -> Plan:
    """Build GoSN (converting non-well-designed parts), GoJ and class structure."""
    ast = query.ast
    gosn = build_gosn(ast)
    all_violations: list[Violation] = []
    while True:
        violations = check_well_designed(ast)
        if not violations:
            break
        all_violations.extend(v for v in violations if v not in all_violations)
        gosn = transform_nwd(gosn, violations)
        ast = convert_left_joins(ast, gosn)
    patterns = list(query.patterns)
    got = build_got(patterns)
    if len(patterns) > 1 and not nx.is_connected(got):
        raise CartesianProductError("unsupported feature: query contains a Cartesian product")
    classes = gosn.peer_classes()
    class_of_sn = {sn: i for i, cls in enumerate(classes) for sn in cls}
    class_parent: dict[int, int | None] = {i: None for i in range(len(classes))}
    for a, b in gosn.uni_edges:
        class_parent[class_of_sn[b]] = class_of_sn[a]
    by_id = {tp.id: tp for tp in patterns}
    for cls in classes:
        members = [by_id[t] for sn in cls for t in gosn.tps_of(sn)]
        if not _connected(members):
            raise CartesianProductError(
                "unsupported feature: Cartesian product inside the group of "
                + ", ".join(tp.label for tp in members))
    goj = build_goj(patterns)
    return Plan(query, ast, gosn, all_violations, goj, is_cyclic(goj), classes, class_of_sn,
                class_parent, gosn.sn_of_tp(), gosn.absolute_masters())


def _tree_orders(jvars: list[str], root: str, goj: GoJ, rank: dict[str, int]) -> tuple[list[str], list[str]]:
    """Post-order (bottom-up) and pre-order (top-down) walks of the GoJ subtree induced by ``jvars``."""
    members = set(jvars)
    adj = {j: sorted((n for n in goj.neighbours(j) if n in members), key=rank.__getitem__) for j in members}
    seen: set[str] = set()
    bu: list[str] = []
    td: list[str] = []

    def visit(j: str) -> None:
        seen.add(j)
        td.append(j)
        for n in adj[j]:
            if n not in seen:
                visit(n)
        bu.append(j)

    visit(root)
    for j in sorted(members - seen, key=rank.__getitem__):
        if j not in seen:
            visit(j)
    return bu, td


def get_jvar_order(plan: Plan, tp_counts: Mapping[int, int]) -> JvarOrder:
    goj = plan.goj
    ranked = rank_jvar_selectivity(goj, tp_counts)
    if plan.cyclic:
        return JvarOrder(True, [ranked], [ranked])
    rank = {j: i for i, j in enumerate(ranked)}
    jset = set(goj.jvars)

    def class_jvars(c: int) -> list[str]:
        out = []
        for t in plan.tps_of_class(c):
            out += [v for v in plan.patterns[t].variables() if v in jset and v not in out]
        return out

    bu_segments: list[list[str]] = []
    td_segments: list[list[str]] = []
    for c in plan.class_order(tp_counts):
        js = class_jvars(c)
        if not js:
            continue
        if plan.class_parent[c] is None:
            root = max(js, key=rank.__getitem__)  # least selective is processed last
        else:
            above = {v for a in plan.ancestors(c) for v in class_jvars(a)}
            shared = [j for j in js if j in above] or js
            root = min(shared, key=rank.__getitem__)
        bu, td = _tree_orders(js, root, goj, rank)
        bu_segments.append(bu)
        td_segments.append(td)
    return JvarOrder(False, bu_segments, td_segments)


def decide_best_match_reqd(plan: Plan) -> bool:
    """Nullification/best-match are needed only for cyclic queries with a multi-jvar slave supernode."""
    if not plan.cyclic:
        return False
    jset = set(plan.goj.jvars)
    for sn, tps in plan.gosn.supernodes:
        if sn in plan.absolute:
            continue
        js = {v for t in tps for v in plan.patterns[t].variables() if v in jset}
        if len(js) >= 2:
            return True
    return False


def describe(plan: Plan, order: JvarOrder | None = None) -> str:
    """Plain-text dump of the plan for --dump-plan."""
    lines = [f"join tree: {render(plan.ast)}"]
    lines.append("supernodes:")
    for sn, tps in plan.gosn.supernodes:
        tag = " (absolute master)" if sn in plan.absolute else ""
        lines.append(f"  SN{sn}: {', '.join(plan.patterns[t].label for t in tps)}{tag}")
    for a, b in sorted(plan.gosn.uni_edges):
        lines.append(f"  SN{a} -> SN{b}")
    for a, b in sorted(plan.gosn.bi_edges):
        lines.append(f"  SN{a} <-> SN{b}")
    if plan.violations:
        lines.append("non-well-designed pairs: " + ", ".join(
            f"(SN{v.violating}, SN{v.counterpart}) on ?{v.variable}" for v in plan.violations))
    lines.append("GoJ: " + (", ".join(f"?{a}-?{b}" for a, b, _ in plan.goj.edges) or "(no edges)")
                 + f"  jvars={['?' + j for j in plan.goj.jvars]}  cyclic={plan.cyclic}")
    if order is not None:
        lines.append(f"order_bu: {order.bu_segments}")
        lines.append(f"order_td: {order.td_segments}")
    return "\n".join(lines)
