"""Naive reference evaluator for the BGP/OPTIONAL fragment.

Everything here works on decoded term triples with nested loops and no index,
so it shares no code with the engine beyond the query AST.

Mappings are dicts.  Under the default null-intolerant convention every
mapping of a subpattern has the same keys, with ``None`` standing for NULL, and
a shared variable that is NULL on either side makes two mappings
incompatible.  The null-tolerant convention follows SPARQL: unbound variables
are simply absent and impose no constraint.
"""
from __future__ import annotations

from collections import Counter
from typing import Iterable

from .dictionary import Term, TermTriple
from .query import Bgp, Join, LeftJoin, Node, Query, TriplePattern, Var, node_patterns

Mapping = dict  # variable name -> Term | None (plus one "#tpN" provenance key per pattern)


def _prov(tp: TriplePattern) -> str:
    return f"#{tp.label}"


def _match(tp: TriplePattern, triple: TermTriple, mu: Mapping) -> Mapping | None:
    out = dict(mu)
    for slot, term in zip(tp.slots, triple):
        if isinstance(slot, Var):
            bound = out.get(slot.name)
            if bound is None:
                if slot.name in out and out[slot.name] is None:
                    return None
                out[slot.name] = term
            elif bound != term:
                return None
        elif slot != term:
            return None
    out[_prov(tp)] = True
    return out


def eval_bgp(graph: Iterable[TermTriple], patterns: Iterable[TriplePattern]) -> list[Mapping]:
    """All total assignments, by nested loops over the raw triples."""
    graph = list(dict.fromkeys(graph))
    results: list[Mapping] = [{}]
    for tp in patterns:
        results = [m for mu in results for t in graph if (m := _match(tp, t, mu)) is not None]
    return results


def _compatible(a: Mapping, b: Mapping, tolerant: bool) -> bool:
    for k in a.keys() & b.keys():
        x, y = a[k], b[k]
        if tolerant:
            if x != y:
                return False
        elif x is None or y is None or x != y:
            return False
    return True


def eval_join(left: list[Mapping], right: list[Mapping], tolerant: bool = False) -> list[Mapping]:
    return [{**a, **b} for a in left for b in right if _compatible(a, b, tolerant)]


def eval_left_join(left: list[Mapping], right: list[Mapping], right_keys: Iterable[str] = (),
                   tolerant: bool = False) -> list[Mapping]:
    """Join plus the unmatched left mappings; intolerant mode pads them with NULL for ``right_keys``."""
    out: list[Mapping] = []
    pad = {k: None for k in right_keys}
    for a in left:
        partners = [b for b in right if _compatible(a, b, tolerant)]
        if partners:
            out += [{**a, **b} for b in partners]
        elif tolerant:
            out.append(dict(a))
        else:
            out.append({**pad, **a})
    return out


def _keys(node: Node) -> list[str]:
    out: list[str] = []
    for tp in node_patterns(node):
        out += [v for v in tp.variables() if v not in out]
        out.append(_prov(tp))
    return out


def eval_node(graph: list[TermTriple], node: Node, tolerant: bool = False) -> list[Mapping]:
    if isinstance(node, Bgp):
        return eval_bgp(graph, node.patterns)
    left = eval_node(graph, node.left, tolerant)
    right = eval_node(graph, node.right, tolerant)
    if isinstance(node, Join):
        return eval_join(left, right, tolerant)
    return eval_left_join(left, right, _keys(node.right), tolerant)


def to_rows(mappings: Iterable[Mapping], variables: Iterable[str]) -> list[tuple[Term | None, ...]]:
    variables = tuple(variables)
    return [tuple(m.get(v) for v in variables) for m in mappings]


def eval_query(graph: Iterable[TermTriple], query: Query, ast: Node | None = None,
               tolerant: bool = False) -> list[tuple[Term | None, ...]]:
    """Evaluate the join tree as written (``ast`` overrides the query's own tree)."""
    return to_rows(eval_node(list(graph), ast or query.ast, tolerant), query.variables)


def projection_r_tp(mappings: Iterable[Mapping], tp: TriplePattern) -> set[TermTriple]:
    """Distinct triples that ``tp`` contributes to result rows where it matched."""
    out = set()
    for m in mappings:
        if m.get(_prov(tp)):
            out.add(tuple(m[x.name] if isinstance(x, Var) else x for x in tp.slots))  # type: ignore[arg-type]
    return out


def bag_equal(a: Iterable[tuple], b: Iterable[tuple]) -> bool:
    return Counter(a) == Counter(b)


# Second evaluator, used to cross-check the first on well-designed queries:
# the join tree is folded into a tree of BGPs (OPTIONAL hangs the right side
# under the left root, an inner join merges the two roots) and evaluated top-down.


class _PNode:
    def __init__(self, patterns: list[TriplePattern], children: list["_PNode"]):
        self.patterns = patterns
        self.children = children

    def variables(self) -> list[str]:
        out: list[str] = []
        for tp in self.patterns:
            out += [v for v in tp.variables() if v not in out]
        for c in self.children:
            out += [v for v in c.variables() if v not in out]
        return out


def _pattern_tree(node: Node) -> _PNode:
    if isinstance(node, Bgp):
        return _PNode(list(node.patterns), [])
    left, right = _pattern_tree(node.left), _pattern_tree(node.right)
    if isinstance(node, LeftJoin):
        return _PNode(left.patterns, left.children + [right])
    return _PNode(left.patterns + right.patterns, left.children + right.children)


def _extend(graph: list[TermTriple], pnode: _PNode, mu: dict) -> list[dict]:
    sols = [{}]
    for tp in pnode.patterns:
        nxt = []
        for s in sols:
            base = {**mu, **s}
            for t in graph:
                m = _match(tp, t, base)
                if m is not None:
                    nxt.append({k: v for k, v in m.items() if k not in mu or k.startswith("#")})
        sols = nxt
    out = []
    for s in sols:
        combos = [dict(s)]
        for child in pnode.children:
            ext = _extend(graph, child, {**mu, **s})
            if not ext:
                ext = [{v: None for v in child.variables() if v not in mu and v not in s}]
            combos = [{**c, **e} for c in combos for e in ext]
        out += combos
    return out


def eval_pattern_tree(graph: Iterable[TermTriple], query: Query) -> list[tuple[Term | None, ...]]:
    graph = list(dict.fromkeys(graph))
    return to_rows(_extend(graph, _pattern_tree(query.ast), {}), query.variables)
