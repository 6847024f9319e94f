"""Command-line front end: ``bitsparql {index,query,verify,stats,gen}``.

Exit codes: 0 success, 1 runtime error, 2 unsupported query feature,
3 engine/oracle divergence.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
from collections import Counter
from pathlib import Path

from .bitmat import Family
from .dictionary import build_dictionary, parse_ntriples
from .errors import BitSparqlError, UnsupportedFeatureError
from .execution import run_query
from .generate import CLASSES, generate_case, graph_to_nt
from .index import Index, build_indexes
from .oracle import bag_equal, eval_query
from .plan import describe
from .query import parse_query

EXIT_OK, EXIT_ERROR, EXIT_UNSUPPORTED, EXIT_DIVERGENCE = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_triples(path: str) -> list:
    with open(path, "rb") as fh:
        return list(parse_ntriples(fh.read()))


def cmd_index(args) -> int:
    out = Path(args.index_dir)
    if out.exists() and any(out.iterdir()):
        if not args.force:
            _err(f"{out} already exists; pass --force to rebuild it")
            return EXIT_ERROR
        shutil.rmtree(out)
    triples = _load_triples(args.data)
    d, encoded = build_dictionary(triples)
    manifest = build_indexes(d, encoded, out)
    print(f"#triples\t{len(encoded)}")
    print(f"#S\t{d.s_count}")
    print(f"#P\t{d.p_count}")
    print(f"#O\t{d.o_count}")
    print(f"#BitMats\t{len(manifest)}")
    return EXIT_OK


def cmd_query(args) -> int:
    index = Index.open(args.index_dir)
    text = Path(args.query).read_text()
    result = run_query(text, index, force_best_match=args.force_best_match)
    if args.dump_plan:
        _err(describe(result.plan, result.order))
    sys.stdout.write(result.to_tsv())
    if args.stats_file:
        Path(args.stats_file).write_text(result.stats_json() + "\n")
    elif args.stats == "json":
        _err(result.stats_json())
    elif args.stats == "text":
        _err(result.stats_text().rstrip("\n"))
    return EXIT_OK


def _diverges(graph, query_text: str, index: Index, tolerant: bool) -> tuple[bool, list, list]:
    q = parse_query(query_text)
    result = run_query(q, index)
    expected = eval_query(graph, q, result.plan.ast, tolerant=tolerant)
    return not bag_equal(result.rows, expected), result.rows, expected


def _minimize(graph: list, query_text: str, tolerant: bool) -> list:
    """Greedily drop triples while the divergence persists."""
    current = list(graph)
    i = 0
    while i < len(current):
        trial = current[:i] + current[i + 1:]
        d, enc = build_dictionary(trial)
        if _diverges(trial, query_text, Index.in_memory(d, enc), tolerant)[0]:
            current = trial
        else:
            i += 1
    return current


def _dump(query_text: str, graph: list, got: list, expected: list) -> None:
    _err("DIVERGENCE")
    _err("query:\n" + query_text.rstrip())
    _err("data:\n" + graph_to_nt(graph).rstrip())
    fmt = lambda r: "\t".join("NULL" if t is None else t.n3() for t in r)  # noqa: E731
    extra, missing = Counter(got) - Counter(expected), Counter(expected) - Counter(got)
    for row, n in extra.items():
        _err(f"engine only (x{n}): {fmt(row)}")
    for row, n in missing.items():
        _err(f"oracle only (x{n}): {fmt(row)}")


def cmd_verify(args) -> int:
    tolerant = args.oracle_convention == "tolerant"
    if args.random:
        classes = [args.cls] if args.cls else list(CLASSES)
        for i in range(args.random):
            cls = classes[i % len(classes)]
            case = generate_case(args.seed + i, cls)
            with tempfile.TemporaryDirectory() as tmp:
                d, enc = build_dictionary(case.graph)
                build_indexes(d, enc, tmp)
                bad, got, expected = _diverges(case.graph, case.query, Index.open(tmp), tolerant)
            if bad:
                _err(f"case {i} (class {cls}, seed {args.seed + i})")
                small = _minimize(case.graph, case.query, tolerant)
                d, enc = build_dictionary(small)
                _, got, expected = _diverges(small, case.query, Index.in_memory(d, enc), tolerant)
                _dump(case.query, small, got, expected)
                return EXIT_DIVERGENCE
        print(f"PASS {args.random} random cases")
        return EXIT_OK
    if not (args.index_dir and args.data and args.query):
        _err("verify needs INDEX_DIR DATA QUERY, or --random N")
        return EXIT_ERROR
    graph = _load_triples(args.data)
    text = Path(args.query).read_text()
    bad, got, expected = _diverges(graph, text, Index.open(args.index_dir), tolerant)
    if bad:
        _dump(text, graph, got, expected)
        return EXIT_DIVERGENCE
    print(f"PASS {len(got)} rows")
    return EXIT_OK


def cmd_stats(args) -> int:
    index = Index.open(args.index_dir)
    d = index.dictionary
    info = {
        "#triples": sum(n for (fam, _), n in index.manifest.counts.items() if fam is Family.SO),
        "#S": d.s_count,
        "#P": d.p_count,
        "#O": d.o_count,
        "#SO shared": d.so_count,
        "#BitMats": len(index.manifest),
    }
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        for k, v in info.items():
            print(f"{k}\t{v}")
    return EXIT_OK


def cmd_gen(args) -> int:
    case = generate_case(args.seed, args.cls)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "data.nt").write_text(case.ntriples)
    (out / "query.rq").write_text(f"# class: {case.cls}, seed: {case.seed}\n" + case.query + "\n")
    print(f"wrote {out / 'data.nt'} ({len(case.graph)} triples) and {out / 'query.rq'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bitsparql", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("index", help="build an index from an N-Triples file")
    s.add_argument("data")
    s.add_argument("index_dir")
    s.add_argument("--force", action="store_true", help="replace an existing index directory")
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("query", help="run one query file against an index")
    s.add_argument("index_dir")
    s.add_argument("query")
    s.add_argument("--dump-plan", action="store_true", help="print supernodes, GoJ and jvar orders to stderr")
    s.add_argument("--force-best-match", action="store_true",
                   help="always run nullification and best-match")
    s.add_argument("--stats", choices=["none", "text", "json"], default="text", help="stats report on stderr")
    s.add_argument("--stats-file", help="write the JSON stats report to this file instead")
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("verify", help="compare engine output with the reference evaluator")
    s.add_argument("index_dir", nargs="?")
    s.add_argument("data", nargs="?")
    s.add_argument("query", nargs="?")
    s.add_argument("--random", type=int, default=0, metavar="N", help="check N generated cases instead")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--class", dest="cls", choices=CLASSES)
    s.add_argument("--oracle-convention", choices=["intolerant", "tolerant"], default="intolerant")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("stats", help="print index dimensions")
    s.add_argument("index_dir")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("gen", help="write a generated graph and query")
    s.add_argument("out_dir")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--class", dest="cls", choices=CLASSES, default="acyclic-wd")
    s.set_defaults(func=cmd_gen)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedFeatureError as exc:
        _err(f"error: {exc}")
        return EXIT_UNSUPPORTED
    except (BitSparqlError, OSError) as exc:
        _err(f"error: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
