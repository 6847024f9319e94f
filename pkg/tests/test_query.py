from __future__ import annotations

import pytest

from bitsparql.errors import ParseError, UnsupportedFeatureError, UnsupportedPatternError
from bitsparql.query import RDF_TYPE, Bgp, Join, LeftJoin, Var, parse_query, render

P = "PREFIX : <http://example.org/>\n"


def shape(node):
    """Join tree with leaves replaced by their pattern labels."""
    if isinstance(node, Bgp):
        return [tp.label for tp in node.patterns]
    return (type(node).__name__, shape(node.left), shape(node.right))


class TestParseQuery:
    def test_friends_query(self, friends_query):
        q = parse_query(friends_query)
        assert shape(q.ast) == ("LeftJoin", ["tp1"], ["tp2", "tp3"])
        assert render(q.ast) == "(tp1 ⟕ (tp2 ⋈ tp3))"
        assert q.variables == ("friend", "sitcom")

    def test_optional_chain_is_left_associative(self):
        q = parse_query(P + "SELECT * WHERE { ?a :p ?b OPTIONAL { ?b :q ?c } OPTIONAL { ?b :r ?d } }")
        assert shape(q.ast) == ("LeftJoin", ("LeftJoin", ["tp1"], ["tp2"]), ["tp3"])

    def test_nested_groups_shape(self):
        q = parse_query(P + """SELECT * WHERE {
            { { ?a :p ?b OPTIONAL { ?b :p ?c } } { ?a :q ?d OPTIONAL { ?d :p ?e } } }
            OPTIONAL { ?a :r ?f OPTIONAL { ?f :p ?g } } }""")
        assert shape(q.ast) == (
            "LeftJoin",
            ("Join", ("LeftJoin", ["tp1"], ["tp2"]), ("LeftJoin", ["tp3"], ["tp4"])),
            ("LeftJoin", ["tp5"], ["tp6"]),
        )

    def test_triples_after_group_join(self):
        q = parse_query(P + "SELECT * WHERE { ?a :p ?b OPTIONAL { ?b :q ?c } ?a :r ?d }")
        assert shape(q.ast) == ("Join", ("LeftJoin", ["tp1"], ["tp2"]), ["tp3"])

    def test_terms(self):
        q = parse_query(P + 'SELECT * WHERE { ?x a :C . ?x <http://x/p> "lit"@en . _:b :p ?x . }')
        t1, t2, t3 = q.patterns
        assert t1.p.lexical == RDF_TYPE
        assert t2.o.lexical == '"lit"@en'
        assert t3.s.lexical == "b"

    def test_select_list_sets_order(self):
        q = parse_query(P + "SELECT ?b ?a WHERE { ?a :p ?b }")
        assert q.variables == ("b", "a")

    def test_dollar_variables(self):
        assert parse_query("SELECT * { $x <p> ?y }").patterns[0].s == Var("x")

    @pytest.mark.parametrize("word", ["UNION", "FILTER", "MINUS", "LIMIT", "DISTINCT"])
    def test_unsupported_keywords(self, word):
        with pytest.raises(UnsupportedFeatureError, match="unsupported feature"):
            parse_query(f"SELECT * WHERE {{ ?a <p> ?b }} {word} {{ ?a <q> ?b }}")

    def test_three_variables_rejected(self):
        with pytest.raises(UnsupportedPatternError):
            parse_query("SELECT * WHERE { ?a ?p ?b }")

    def test_repeated_variable_rejected(self):
        with pytest.raises(UnsupportedPatternError):
            parse_query("SELECT * WHERE { ?a <p> ?a }")

    def test_predicate_and_node_variable_rejected(self):
        with pytest.raises(UnsupportedPatternError):
            parse_query("SELECT * WHERE { ?a ?p <x> . ?p <q> <y> }")

    def test_partial_projection_rejected(self):
        with pytest.raises(UnsupportedFeatureError):
            parse_query("SELECT ?a WHERE { ?a <p> ?b }")

    @pytest.mark.parametrize(
        "text, message",
        [
            ("SELECT * WHERE { }", "empty group"),
            ("SELECT * WHERE { OPTIONAL { ?a <p> ?b } }", "OPTIONAL needs"),
            ("SELECT * WHERE { ?a <p> ?b ", "unterminated"),
            ("SELECT * WHERE { ?a :p ?b }", "undeclared prefix"),
            ("SELECT * WHERE { ?a \"p\" ?b }", "predicate must be an IRI"),
            ("ASK { ?a <p> ?b }", "unsupported"),
            ("SELECT * WHERE { ?a <p> ?b } }", "trailing"),
        ],
    )
    def test_errors(self, text, message):
        with pytest.raises((ParseError, UnsupportedFeatureError), match=message):
            parse_query(text)

    def test_parse_error_has_line(self):
        with pytest.raises(ParseError) as exc:
            parse_query("SELECT * WHERE {\n ?a <p> ?b .\n ?a ! ?c }")
        assert exc.value.line == 3
