"""Semi-join based pruning of the per-pattern BitMats.

Every operation only ever shrinks a BitMat, through fold projections and
unfold masks.  If an absolute-master pattern runs empty the query has no
answers, so processing stops and every BitMat is cleared.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .bitmat import BitArray, fold
from .dictionary import Space
from .index import Index, PatternMatrix, apply_mask, convert_mask, load_bitmat_for_tp
from .plan import JvarOrder, Plan


@dataclass
class PruneStats:
    initial: dict[int, int] = field(default_factory=dict)  # matches before any pruning
    after_init: dict[int, int] = field(default_factory=dict)
    after_prune: dict[int, int] = field(default_factory=dict)
    t_init: float = 0.0
    t_prune: float = 0.0
    aborted_in: str | None = None  # "init" or "prune"
    operations: int = 0


@dataclass
class PruneContext:
    plan: Plan
    order: JvarOrder
    index: Index
    mats: dict[int, PatternMatrix] = field(default_factory=dict)
    stats: PruneStats = field(default_factory=PruneStats)

    @property
    def aborted(self) -> bool:
        return self.stats.aborted_in is not None

    def count(self, tp: int) -> int:
        return self.mats[tp].bm.triple_count

    def counts(self) -> dict[int, int]:
        return {tp: m.bm.triple_count for tp, m in self.mats.items()}

    def bindings(self, tp: int, var: str) -> tuple[BitArray, Space]:
        pm = self.mats[tp]
        return fold(pm.bm, pm.dim_of(var)), pm.space_of(var)

    def restrict(self, tp: int, var: str, mask: BitArray, space: Space) -> None:
        apply_mask(self.mats[tp], var, mask, space, self.index.dictionary)
        self.stats.operations += 1

    def master_empty(self) -> bool:
        return any(self.plan.is_absolute_tp(tp) and m.bm.triple_count == 0 for tp, m in self.mats.items())

    def abort(self, phase: str) -> None:
        self.stats.aborted_in = phase
        for m in self.mats.values():
            m.bm.rows.clear()
            m.bm.refresh_meta()


def _row_var(plan: Plan, order: JvarOrder, tp_id: int) -> str | None:
    """Row-axis variable for a two-variable pattern: the jvar, or the one earlier in order_bu."""
    tp = plan.patterns[tp_id]
    names = tp.variables()
    if len(names) != 2:
        return None
    jvars = set(plan.goj.jvars)
    a, b = names
    if (a in jvars) != (b in jvars):
        return a if a in jvars else b
    seq = order.order_bu
    pos = {j: seq.index(j) for j in (a, b) if j in seq}
    if a in pos and b in pos and pos[b] < pos[a]:
        return b
    return a


def init(plan: Plan, order: JvarOrder, index: Index) -> PruneContext:
    """Load one BitMat per pattern in query order, pruning actively from earlier loads."""
    start = time.perf_counter()
    ctx = PruneContext(plan, order, index)
    for tp in plan.patterns:
        pm = load_bitmat_for_tp(index, tp, _row_var(plan, order, tp.id))
        ctx.mats[tp.id] = pm
        ctx.stats.initial[tp.id] = pm.bm.triple_count
        for prev in plan.patterns[: tp.id]:
            if not (plan.class_of_tp(prev.id) == plan.class_of_tp(tp.id) or plan.is_master_tp(prev.id, tp.id)):
                continue
            for var in set(prev.variables()) & set(tp.variables()):
                mask, space = ctx.bindings(prev.id, var)
                ctx.restrict(tp.id, var, mask, space)
        if ctx.master_empty():
            for rest in plan.patterns[tp.id + 1:]:
                ctx.mats[rest.id] = load_bitmat_for_tp(index, rest, _row_var(plan, order, rest.id))
                ctx.stats.initial[rest.id] = ctx.count(rest.id)
            ctx.abort("init")
            break
    ctx.stats.after_init = ctx.counts()
    ctx.stats.t_init = time.perf_counter() - start
    return ctx


def semi_join(ctx: PruneContext, jvar: str, slave: int, master: int) -> None:
    """slave := slave semi-join master on jvar; the master is left untouched."""
    mask, space = ctx.bindings(master, jvar)
    ctx.restrict(slave, jvar, mask, space)


def clustered_semi_join(ctx: PruneContext, jvar: str, tps: list[int]) -> None:
    """Restrict every pattern in ``tps`` to the jvar bindings they all share."""
    if len(tps) < 2:
        return
    d = ctx.index.dictionary
    beta, space = ctx.bindings(tps[0], jvar)
    for tp in tps[1:]:
        mask, sp = ctx.bindings(tp, jvar)
        beta = beta & convert_mask(mask, sp, space, d)
    for tp in tps:
        ctx.restrict(tp, jvar, beta, space)


def _prune_jvar(ctx: PruneContext, jvar: str) -> bool:
    """One jvar step of the pruning pass; returns False once the query is known empty."""
    plan = ctx.plan
    holders = plan.goj.occurrences[jvar]
    depth = {tp: len(plan.ancestors(plan.class_of_tp(tp))) for tp in holders}
    for slave in sorted(holders, key=lambda t: (depth[t], t)):
        masters = [m for m in holders if plan.is_master_tp(m, slave)]
        for master in sorted(masters, key=lambda t: (ctx.count(t), t)):
            semi_join(ctx, jvar, slave, master)
            if ctx.master_empty():
                return False
    by_class: dict[int, list[int]] = {}
    for tp in holders:
        by_class.setdefault(plan.class_of_tp(tp), []).append(tp)
    for c in sorted(by_class, key=lambda c: (len(plan.ancestors(c)), c)):
        clustered_semi_join(ctx, jvar, sorted(by_class[c]))
        if ctx.master_empty():
            return False
    return True


def prune_triples(ctx: PruneContext) -> None:
    """Bottom-up then top-down passes over the jvar order."""
    start = time.perf_counter()
    if not ctx.aborted:
        for seq in (ctx.order.order_bu, ctx.order.order_td):
            if not all(_prune_jvar(ctx, j) for j in seq):
                ctx.abort("prune")
                break
    ctx.stats.after_prune = ctx.counts()
    ctx.stats.t_prune = time.perf_counter() - start
