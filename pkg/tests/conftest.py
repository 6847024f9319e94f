from __future__ import annotations

import pytest

from bitsparql.datasets import FRIENDS_SITCOM_QUERY, SITCOM_NT
from bitsparql.dictionary import Term, build_dictionary, parse_ntriples
from bitsparql.index import Index, build_indexes

EX = "http://example.org/"


def ex(name: str) -> Term:
    return Term.iri(EX + name)


@pytest.fixture(scope="session")
def sitcom_triples():
    return list(parse_ntriples(SITCOM_NT))


@pytest.fixture(scope="session")
def sitcom_index(sitcom_triples):
    d, enc = build_dictionary(sitcom_triples)
    return Index.in_memory(d, enc)


@pytest.fixture
def sitcom_index_dir(tmp_path, sitcom_triples):
    d, enc = build_dictionary(sitcom_triples)
    build_indexes(d, enc, tmp_path / "idx")
    return tmp_path / "idx"


@pytest.fixture(scope="session")
def friends_query() -> str:
    return FRIENDS_SITCOM_QUERY


def index_for(graph) -> Index:
    d, enc = build_dictionary(graph)
    return Index.in_memory(d, enc)


# Acceptance criteria: tests marked ``criterion(n, title)`` get one summary line each.
_CRITERIA: list[tuple[int, str, bool, float]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None and (rep.when == "call" or (rep.when == "setup" and rep.failed)):
        _CRITERIA.append((mark.args[0], mark.args[1], rep.passed, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n, title, passed, duration in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if passed else 'FAIL'}  {title} ({duration:.2f}s)")
