"""Acceptance suite: one test per criterion, each summarised as a PASS/FAIL line."""
from __future__ import annotations

import random
import time

import pytest

from bitsparql.bitmat import BitArray, BitMat, Dim, Family, compress_row, decompress_row, fold, rle_size, unfold
from bitsparql.datasets import NWD_QUERY
from bitsparql.dictionary import build_dictionary
from bitsparql.execution import run_query, subsumes
from bitsparql.generate import CLASSES, MAX_DEPTH, MAX_TPS, generate_case, random_graph
from bitsparql.index import Index, build_indexes
from bitsparql.oracle import bag_equal, eval_node, eval_query, projection_r_tp
from bitsparql.plan import (
    build_goj,
    build_gosn,
    build_got,
    check_well_designed,
    got_has_cycle,
    is_cyclic,
    transform_nwd,
)
from bitsparql.query import Bgp, LeftJoin, parse_query

from conftest import ex, index_for

WD_CLASSES = ("acyclic-wd", "cyclic", "cyclic-single-jvar-slave")
BASE = 100_000  # keeps the acceptance corpus disjoint from the unit-test seeds


def opt_depth(node) -> int:
    if isinstance(node, Bgp):
        return 0
    if isinstance(node, LeftJoin):
        return max(opt_depth(node.left), 1 + opt_depth(node.right))
    return max(opt_depth(node.left), opt_depth(node.right))


@pytest.fixture(scope="module")
def acyclic_corpus():
    return [generate_case(BASE + i, "acyclic-wd") for i in range(200)]


@pytest.mark.criterion(1, "running example rows and post-prune counts")
def test_running_example(friends_query, sitcom_index_dir):
    start = time.perf_counter()
    result = run_query(friends_query, Index.open(sitcom_index_dir))
    elapsed = time.perf_counter() - start
    assert bag_equal(result.rows, [(ex("Larry"), None), (ex("Julia"), ex("Seinfeld"))])
    assert result.stats["triples per tp after pruning"] == {"tp1": 2, "tp2": 1, "tp3": 1}
    assert elapsed < 1.0


@pytest.mark.criterion(2, "500 well-designed cases bag-equal to the oracle")
def test_oracle_equivalence():
    start = time.perf_counter()
    failures = []
    cyclic = 0
    for i in range(500):
        case = generate_case(BASE + i, WD_CLASSES[i % 3])
        q = parse_query(case.query)
        assert len(q.patterns) <= MAX_TPS and opt_depth(q.ast) <= MAX_DEPTH
        assert not check_well_designed(q.ast)
        result = run_query(q, index_for(case.graph))
        cyclic += result.plan.cyclic
        if not bag_equal(result.rows, eval_query(case.graph, q)):
            failures.append(case.seed)
    assert failures == []
    assert 0 < cyclic < 500
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(3, "200 acyclic cases: every pruned BitMat equals its result projection")
def test_minimality(acyclic_corpus):
    failures = []
    for case in acyclic_corpus:
        index = index_for(case.graph)
        result = run_query(case.query, index)
        mappings = eval_node(case.graph, result.plan.ast)
        for tp in result.plan.patterns:
            if result.context.mats[tp.id].triples(index.dictionary) != projection_r_tp(mappings, tp):
                failures.append((case.seed, tp.label))
    assert failures == []


@pytest.mark.criterion(4, "200 acyclic cases: forced best-match changes nothing")
def test_best_match_noop(acyclic_corpus):
    failures = []
    for case in acyclic_corpus:
        index = index_for(case.graph)
        if not bag_equal(run_query(case.query, index).rows, run_query(case.query, index, force_best_match=True).rows):
            failures.append(case.seed)
    assert failures == []


@pytest.mark.criterion(5, "100 cyclic cases with single-jvar slaves: no subsumed pairs before best-match")
def test_no_subsumption():
    failures = []
    for i in range(100):
        case = generate_case(BASE + i, "cyclic-single-jvar-slave")
        result = run_query(case.query, index_for(case.graph), keep_pre_best_match=True)
        assert not result.stats["best-match reqd?"]
        rows = result.pre_best_match or []
        if any(subsumes(a, b) for a in rows for b in rows):
            failures.append(case.seed)
        assert bag_equal(result.rows, eval_query(case.graph, parse_query(case.query)))
    assert failures == []


@pytest.mark.criterion(6, "1000 queries: GoJ cyclicity equals collapsed GoT cyclicity")
def test_goj_got_agreement():
    disagreements = []
    seen_cyclic = 0
    for i in range(1000):
        patterns = parse_query(generate_case(BASE + i, CLASSES[i % len(CLASSES)]).query).patterns
        goj = is_cyclic(build_goj(patterns))
        seen_cyclic += goj
        if goj != got_has_cycle(build_got(patterns)):
            disagreements.append(i)
    assert disagreements == []
    assert 0 < seen_cyclic < 1000


def _random_row(rng: random.Random, width: int) -> list[int]:
    style = rng.random()
    if style < 0.3:
        density = rng.choice([0.001, 0.01, 0.05])
        return [int(rng.random() < density) for _ in range(width)]
    if style < 0.6:
        density = rng.random()
        return [int(rng.random() < density) for _ in range(width)]
    # long runs
    out: list[int] = []
    bit = rng.randint(0, 1)
    while len(out) < width:
        out += [bit] * rng.randint(1, max(1, width // rng.randint(1, 20)))
        bit ^= 1
    return out[:width]


@pytest.mark.criterion(7, "10,000 random rows round-trip, hybrid never larger than RLE, worked examples")
def test_compression():
    rng = random.Random(7)
    for _ in range(10_000):
        plain = _random_row(rng, rng.randint(1, 4096))
        row = compress_row(plain)
        assert decompress_row(row) == plain
        assert row.size() <= rle_size(plain)
    dense = compress_row([int(c) for c in "1110011110"]).payload
    assert f"[{dense[0]}] " + " ".join(map(str, dense[1:])) == "[1] 3 2 4 1"
    sparse = compress_row([int(c) for c in "0010010000"]).payload
    assert " ".join(map(str, sparse)) == "3 6"


@pytest.mark.criterion(8, "1000 random BitMats: fold/unfold equal the boolean-matrix reference")
def test_fold_unfold():
    rng = random.Random(8)
    for _ in range(1000):
        r, c = rng.randint(1, 64), rng.randint(1, 64)
        density = rng.choice([0.0, 0.02, 0.1, 0.5, 0.95, 1.0])
        ref = {(i, j) for i in range(1, r + 1) for j in range(1, c + 1) if rng.random() < density}
        bm = BitMat.from_pairs(Family.SO, 1, r, c, ref)
        retain = rng.choice([Dim.ROW, Dim.COL])
        axis = 0 if retain is Dim.ROW else 1
        width = r if retain is Dim.ROW else c
        assert set(fold(bm, retain).positions()) == {p[axis] for p in ref}
        mask = {k for k in range(1, width + 1) if rng.random() < 0.5}
        unfold(bm, BitArray.from_positions(width, mask), retain)
        expect = {p for p in ref if p[axis] in mask}
        assert set(bm.pairs()) == expect and bm.triple_count == len(expect)
        assert set(fold(bm, Dim.ROW).positions()) == {p[0] for p in expect}
        assert set(fold(bm, Dim.COL).positions()) == {p[1] for p in expect}


@pytest.mark.criterion(9, "BitMat file count is 2|Vp| + |Vs| + |Vo| on four datasets")
def test_index_cardinality(tmp_path, sitcom_triples):
    graphs = [sitcom_triples] + [random_graph(random.Random(s), 30, 6, 300) for s in range(3)]
    for i, graph in enumerate(graphs):
        d, enc = build_dictionary(graph)
        out = tmp_path / f"idx{i}"
        build_indexes(d, enc, out)
        files = list((out / "bitmats").rglob("*.bm"))
        assert len(files) == 2 * d.p_count + d.s_count + d.o_count


@pytest.mark.criterion(10, "NWD example edge conversions and 100 NWD cases against the converted tree")
def test_nwd_transformation():
    q = parse_query(NWD_QUERY)
    g = build_gosn(q.ast)
    t = transform_nwd(g, check_well_designed(q.ast))
    assert g.uni_edges - t.uni_edges == {(0, 1), (4, 5)}
    assert t.bi_edges - g.bi_edges == {(0, 1), (4, 5)}
    failures = []
    for i in range(100):
        case = generate_case(BASE + i, "nwd")
        q = parse_query(case.query)
        assert check_well_designed(q.ast)
        result = run_query(q, index_for(case.graph))
        assert not check_well_designed(result.plan.ast)
        if not bag_equal(result.rows, eval_query(case.graph, q, result.plan.ast)):
            failures.append(case.seed)
    assert failures == []


@pytest.mark.criterion(11, "50 unsatisfiable-master cases abort early with no rows")
def test_early_abort():
    for i in range(50):
        case = generate_case(BASE + i, "early-abort")
        q = parse_query(case.query)
        result = run_query(q, index_for(case.graph))
        assert result.rows == []
        assert result.stats["early abort"] and result.stats["prune skipped"] and result.stats["join skipped"]
        assert eval_query(case.graph, q) == []
