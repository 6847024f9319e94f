"""Result generation: pattern ordering, the multi-way pipelined join, nullification and best-match."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .dictionary import Dictionary, Space, Term
from .index import Index, PatternMatrix, estimate_count
from .plan import JvarOrder, Plan, decide_best_match_reqd, get_jvar_order, make_plan
from .pruning import PruneContext, init, prune_triples
from .query import Query, parse_query

# A binding key is (space tag, id); ids 1..|V_so| are tagged "SO" so that a
# value bound on the subject axis matches the same term on the object axis.
Key = tuple[str, int]
Row = tuple  # of Key | None
NULL = None


def to_key(space: Space, ident: int, so_count: int) -> Key:
    if space is not Space.P and ident <= so_count:
        return ("SO", ident)
    return (space.value, ident)


def from_key(key: Key, space: Space) -> int | None:
    """Coordinate of ``key`` on ``space``, or None if the term does not exist there."""
    tag, ident = key
    if tag == space.value or (tag == "SO" and space is not Space.P):
        return ident
    return None


def decode_key(key: Key, d: Dictionary) -> Term:
    tag, ident = key
    return d.decode(ident, Space.S if tag == "SO" else Space(tag))


def sort_tps(ctx: PruneContext) -> list[int]:
    """Master classes first; inside a class ascending remaining triple count, ties by pattern id."""
    plan = ctx.plan
    counts = ctx.counts()
    out: list[int] = []
    for c in plan.class_order(counts):
        out += sorted(plan.tps_of_class(c), key=lambda t: (counts[t], t))
    return out


def _matches(pm: PatternMatrix, bound: dict[str, Key], so: int) -> Iterator[dict[str, Key]]:
    """Triples of ``pm`` consistent with ``bound`` as new variable bindings."""
    bm = pm.bm
    rv, cv = pm.row_var, pm.col_var
    rows: Sequence[int]
    if rv is None:
        rows = [1] if 1 in bm.rows else []
    elif rv in bound:
        r = from_key(bound[rv], pm.row_space)
        rows = [r] if r is not None and r in bm.rows else []
    else:
        rows = sorted(bm.rows)
    col_fixed = None
    if cv is not None and cv in bound:
        col_fixed = from_key(bound[cv], pm.col_space)
        if col_fixed is None:
            return
    for r in rows:
        bits = bm.rows[r].to_int()
        out: dict[str, Key] = {}
        if rv is not None:
            out[rv] = to_key(pm.row_space, r, so)
        if cv is None:
            if bits & 2:
                yield out
            continue
        if col_fixed is not None:
            if (bits >> col_fixed) & 1:
                out[cv] = to_key(pm.col_space, col_fixed, so)
                yield out
            continue
        while bits:
            low = bits & -bits
            c = low.bit_length() - 1
            bits ^= low
            yield {**out, cv: to_key(pm.col_space, c, so)}


def nullification(plan: Plan, slots: dict[int, dict[str, Key | None]]) -> None:
    """Null every class not fully matched, or whose parent class did not survive."""
    present: dict[int, bool] = {}
    for c in plan.class_order({t: 0 for t in slots}):
        parent = plan.class_parent[c]
        ok = all(all(v is not NULL for v in slots[t].values()) for t in plan.tps_of_class(c))
        present[c] = ok and (parent is None or present[parent])
        if not present[c]:
            for t in plan.tps_of_class(c):
                slots[t] = {v: NULL for v in slots[t]}


def multi_way_join(ctx: PruneContext, stps: list[int], nulreqd: bool, emit: Callable[[Row], None]) -> None:
    """Depth-first pipelined join over the pruned BitMats.

    The only mutable state is ``slots`` (the TP-indexed binding buffer) and
    ``visited``.  An absolute-master pattern without a match backtracks; a
    slave pattern without one takes NULL for all its variables.
    """
    plan = ctx.plan
    so = ctx.index.dictionary.so_count
    variables = plan.query.variables
    depth = {t: len(plan.ancestors(plan.class_of_tp(t))) for t in stps}
    related = {t: [u for u in stps if u != t and plan.related(t, u)] for t in stps}
    tp_vars = {t: plan.patterns[t].variables() for t in stps}
    slots: dict[int, dict[str, Key | None]] = {}
    visited: list[int] = []

    def pick() -> int:
        for t in stps:
            if t in slots:
                continue
            if not visited or any(u in slots and set(tp_vars[t]) & set(tp_vars[u]) for u in related[t]):
                return t
        return next(t for t in stps if t not in slots)

    def output() -> Row:
        if nulreqd:
            nullification(plan, slots)
        row = []
        for v in variables:
            best = None
            for t in sorted(slots, key=lambda t: (depth[t], t)):
                val = slots[t].get(v, NULL)
                if val is not NULL:
                    best = val
                    break
            row.append(best)
        return tuple(row)

    def recurse() -> None:
        if len(visited) == len(stps):
            saved = {t: dict(b) for t, b in slots.items()} if nulreqd else None
            emit(output())
            if saved is not None:
                slots.update(saved)
            return
        t = pick()
        bound: dict[str, Key] = {}
        dead = False
        for u in related[t]:
            if u not in slots:
                continue
            for v in tp_vars[t]:
                if v in slots[u]:
                    if slots[u][v] is NULL:
                        dead = True
                    else:
                        bound[v] = slots[u][v]  # type: ignore[assignment]
        visited.append(t)
        matched = False
        if not dead:
            for binding in _matches(ctx.mats[t], bound, so):
                matched = True
                slots[t] = binding
                recurse()
        if not matched and not plan.is_absolute_tp(t):
            slots[t] = {v: NULL for v in tp_vars[t]}
            recurse()
        slots.pop(t, None)
        visited.pop()

    if stps:
        recurse()


def _nonnull(row: Row) -> int:
    return sum(v is not NULL for v in row)


def subsumes(big: Row, small: Row) -> bool:
    """small is strictly subsumed by big: fewer bindings, agreeing wherever small is bound."""
    return _nonnull(small) < _nonnull(big) and all(s is NULL or s == b for s, b in zip(small, big))


def best_match(rows: list[Row]) -> list[Row]:
    """Drop subsumed rows and collapse repeats.

    Rows are sorted so that every potential subsumer precedes the rows it can
    subsume (more bindings first, NULL sorting after any value), then swept once.
    """
    def key(row: Row):
        return (-_nonnull(row), tuple((1, 0, 0) if v is NULL else (0, *v) for v in row))

    kept: list[Row] = []
    seen: set[Row] = set()
    for row in sorted(rows, key=key):
        if row in seen:
            continue
        if any(subsumes(k, row) for k in kept if _nonnull(k) > _nonnull(row)):
            continue
        seen.add(row)
        kept.append(row)
    return kept


@dataclass
class QueryResult:
    variables: tuple[str, ...]
    keys: list[Row]
    rows: list[tuple[Term | None, ...]]
    stats: dict = field(default_factory=dict)
    plan: Plan | None = None
    order: JvarOrder | None = None
    context: PruneContext | None = None
    pre_best_match: list[Row] | None = None

    def to_tsv(self) -> str:
        lines = ["\t".join(f"?{v}" for v in self.variables)]
        for row in self.rows:
            lines.append("\t".join("NULL" if t is None else t.n3() for t in row))
        return "\n".join(lines) + "\n"

    def stats_json(self) -> str:
        return json.dumps(self.stats, indent=2)

    def stats_text(self) -> str:
        return "\n".join(f"{k}: {v}" for k, v in self.stats.items()) + "\n"


def run_query(query: str | Query, index: Index, force_best_match: bool = False,
              keep_pre_best_match: bool = False) -> QueryResult:
    """Parse, plan, prune and join; returns decoded rows plus a stats report."""
    start = time.perf_counter()
    q = parse_query(query) if isinstance(query, str) else query
    plan = make_plan(q)
    estimates = {tp.id: estimate_count(index, tp) for tp in q.patterns}
    order = get_jvar_order(plan, estimates)
    ctx = init(plan, order, index)
    nulreqd = decide_best_match_reqd(plan)
    prune_triples(ctx)
    keys: list[Row] = []
    pre_best: list[Row] | None = None
    if not ctx.aborted:
        stps = sort_tps(ctx)
        apply_bm = nulreqd or force_best_match
        multi_way_join(ctx, stps, apply_bm, keys.append)
        if keep_pre_best_match:
            pre_best = list(keys)
        if apply_bm:
            keys = best_match(keys)
    d = index.dictionary
    rows = [tuple(None if k is NULL else decode_key(k, d) for k in row) for row in keys]
    stats = {
        "T_init": ctx.stats.t_init,
        "T_prune": ctx.stats.t_prune,
        "T_total": time.perf_counter() - start,
        "#initial triples": sum(ctx.stats.initial.values()),
        "#triples aft pruning": sum(ctx.stats.after_prune.values()),
        "#total results": len(rows),
        "#results with nulls": sum(any(v is None for v in r) for r in rows),
        "best-match reqd?": nulreqd,
        "early abort": ctx.aborted,
        "prune skipped": ctx.stats.aborted_in == "init",
        "join skipped": ctx.aborted,
        "triples per tp after pruning": {plan.patterns[t].label: n for t, n in sorted(ctx.stats.after_prune.items())},
    }
    return QueryResult(q.variables, keys, rows, stats, plan, order, ctx, pre_best)
