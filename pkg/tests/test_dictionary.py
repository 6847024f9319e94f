from __future__ import annotations

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bitsparql.dictionary import (
    Dictionary,
    EncodedTriple,
    Space,
    Term,
    TermKind,
    build_dictionary,
    load_dictionary,
    parse_ntriples,
    persist_dictionary,
)
from bitsparql.errors import FormatError, ParseError


class TestParseNtriples:
    def test_minimal_line(self):
        assert list(parse_ntriples("<a> <p> <b> .")) == [(Term.iri("a"), Term.iri("p"), Term.iri("b"))]

    def test_literal_object(self):
        ((_, _, o),) = parse_ntriples('<a> <p> "x" .')
        assert o == Term(TermKind.LITERAL, '"x"')

    def test_literal_with_tag_and_datatype_is_verbatim(self):
        triples = list(parse_ntriples('<a> <p> "x"@en-GB .\n<a> <p> "1"^^<http://www.w3.org/2001/XMLSchema#int> .'))
        assert [t[2].lexical for t in triples] == ['"x"@en-GB', '"1"^^<http://www.w3.org/2001/XMLSchema#int>']

    def test_blank_nodes(self):
        ((s, _, o),) = parse_ntriples("_:b1 <p> _:b2 .")
        assert s == Term.blank("b1") and o.kind is TermKind.BLANK

    def test_comments_and_blank_lines_skipped(self):
        text = "# header\n\n<a> <p> <b> . # trailing\n   \n"
        assert len(list(parse_ntriples(text))) == 1

    def test_duplicates_preserved(self):
        assert len(list(parse_ntriples("<a> <p> <b> .\n<a> <p> <b> .\n"))) == 2

    def test_binary_stream(self):
        assert len(list(parse_ntriples(io.BytesIO(b"<a> <p> <b> .\n")))) == 1

    @pytest.mark.parametrize(
        "line, message",
        [
            ('<a> "p" <b> .', "predicate must be an IRI"),
            ("<a> _:p <b> .", "predicate must be an IRI"),
            ('"a" <p> <b> .', "literal in subject"),
            ("<a> <p> <b>", "expected '.'"),
            ("<a> <p> .", "expected an RDF term"),
            ("<> <p> <b> .", "empty IRI"),
        ],
    )
    def test_malformed_lines_report_line_number(self, line, message):
        with pytest.raises(ParseError) as exc:
            list(parse_ntriples("<x> <y> <z> .\n" + line))
        assert exc.value.line == 2
        assert message in str(exc.value)


class TestBuildDictionary:
    def test_shared_terms_take_low_ids_in_both_spaces(self):
        J, L, U, S = (Term.iri(x) for x in "JLUS")
        f, a = Term.iri("f"), Term.iri("a")
        d, enc = build_dictionary([(J, f, L), (J, f, U), (U, a, S)])
        assert d.so_count == 1
        assert d.encode(U, Space.S) == 1 and d.encode(U, Space.O) == 1
        assert d.encode(J, Space.S) == 2
        assert d.encode(L, Space.O) == 2 and d.encode(S, Space.O) == 3
        assert d.encode(f, Space.P) == 1 and d.encode(a, Space.P) == 2
        assert EncodedTriple(2, 1, 1) in enc

    def test_empty_input(self):
        d, enc = build_dictionary([])
        assert (d.so_count, d.s_count, d.o_count, d.p_count) == (0, 0, 0, 0)
        assert enc == set()

    def test_duplicate_triple_collapses(self):
        t = (Term.iri("a"), Term.iri("p"), Term.iri("b"))
        assert len(build_dictionary([t, t])[1]) == 1

    def test_first_occurrence_order(self):
        ts = [(Term.iri("z"), Term.iri("p"), Term.iri("y")), (Term.iri("a"), Term.iri("p"), Term.iri("b"))]
        d, _ = build_dictionary(ts)
        assert d.decode(1, Space.S) == Term.iri("z")
        assert d.decode(2, Space.S) == Term.iri("a")

    def test_decode_out_of_range(self):
        d, _ = build_dictionary([(Term.iri("a"), Term.iri("p"), Term.iri("b"))])
        with pytest.raises(KeyError):
            d.decode(2, Space.S)
        assert d.encode(Term.iri("b"), Space.S) is None


terms = st.builds(Term.iri, st.sampled_from([f"n{i}" for i in range(8)]))
lits = st.builds(Term.literal, st.sampled_from(["x", "y"]))
graphs = st.lists(st.tuples(terms, st.builds(Term.iri, st.sampled_from(["p", "q", "r"])), terms | lits), max_size=30)


class TestDictionaryProperties:
    @given(graphs)
    def test_layout_and_bijection(self, graph):
        d, enc = build_dictionary(graph)
        assert d.so_count <= min(d.s_count, d.o_count)
        subjects = {s for s, _, _ in graph}
        objects = {o for _, _, o in graph}
        for t in subjects & objects:
            assert d.encode(t, Space.S) == d.encode(t, Space.O) <= d.so_count
        for space in Space:
            for i in range(1, d.size(space) + 1):
                assert d.encode(d.decode(i, space), space) == i
        for t in enc:
            assert 1 <= t.s <= d.s_count and 1 <= t.p <= d.p_count and 1 <= t.o <= d.o_count

    @given(graphs)
    def test_deterministic(self, graph):
        assert build_dictionary(graph) == build_dictionary(list(graph))


class TestPersistence:
    def test_roundtrip(self, tmp_path, sitcom_triples):
        d, _ = build_dictionary(sitcom_triples)
        persist_dictionary(d, tmp_path / "d.bin")
        loaded = load_dictionary(tmp_path / "d.bin")
        assert loaded == d
        assert (loaded.so_count, loaded.s_count, loaded.o_count, loaded.p_count) == (
            d.so_count, d.s_count, d.o_count, d.p_count)

    def test_empty_dictionary(self, tmp_path):
        persist_dictionary(Dictionary(), tmp_path / "d.bin")
        assert load_dictionary(tmp_path / "d.bin").s_count == 0

    def test_truncated(self, tmp_path, sitcom_triples):
        d, _ = build_dictionary(sitcom_triples)
        persist_dictionary(d, tmp_path / "d.bin")
        data = (tmp_path / "d.bin").read_bytes()
        (tmp_path / "d.bin").write_bytes(data[:-3])
        with pytest.raises(FormatError):
            load_dictionary(tmp_path / "d.bin")

    def test_version_mismatch(self, tmp_path):
        persist_dictionary(Dictionary(), tmp_path / "d.bin")
        data = bytearray((tmp_path / "d.bin").read_bytes())
        data[8] = 99
        (tmp_path / "d.bin").write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version"):
            load_dictionary(tmp_path / "d.bin")
