"""Query syntax: triple patterns, the join tree, and the ``SELECT * WHERE`` parser.

The accepted language is nested groups of triple patterns and ``OPTIONAL``
blocks.  Inside a group, contiguous triple patterns form one ``Bgp`` leaf,
``OPTIONAL`` left-joins everything accumulated so far, and nested groups are
inner-joined in textual order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .dictionary import BLANK_RE, IRI_RE, LITERAL_RE, Term, TermKind
from .errors import ParseError, UnsupportedFeatureError, UnsupportedPatternError

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Slot = Union[Var, Term]


@dataclass(frozen=True)
class TriplePattern:
    id: int
    s: Slot
    p: Slot
    o: Slot

    @property
    def label(self) -> str:
        return f"tp{self.id + 1}"

    @property
    def slots(self) -> tuple[Slot, Slot, Slot]:
        return (self.s, self.p, self.o)

    def variables(self) -> list[str]:
        out: list[str] = []
        for slot in self.slots:
            if isinstance(slot, Var) and slot.name not in out:
                out.append(slot.name)
        return out

    def __str__(self) -> str:
        return " ".join(str(x) for x in self.slots) + " ."


@dataclass(frozen=True)
class Bgp:
    patterns: tuple[TriplePattern, ...]


@dataclass(frozen=True)
class Join:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class LeftJoin:
    left: "Node"
    right: "Node"


Node = Union[Bgp, Join, LeftJoin]


def leaves(node: Node) -> list[Bgp]:
    if isinstance(node, Bgp):
        return [node]
    return leaves(node.left) + leaves(node.right)


def leftmost(node: Node) -> Bgp:
    while not isinstance(node, Bgp):
        node = node.left
    return node


def node_patterns(node: Node) -> list[TriplePattern]:
    return [tp for leaf in leaves(node) for tp in leaf.patterns]


def node_variables(node: Node) -> list[str]:
    out: list[str] = []
    for tp in node_patterns(node):
        for v in tp.variables():
            if v not in out:
                out.append(v)
    return out


def render(node: Node) -> str:
    """Compact algebraic form, e.g. ``(tp1 ⟕ (tp2 ⋈ tp3))``."""
    if isinstance(node, Bgp):
        inner = " ⋈ ".join(tp.label for tp in node.patterns)
        return f"({inner})" if len(node.patterns) > 1 else inner
    op = "⋈" if isinstance(node, Join) else "⟕"
    return f"({render(node.left)} {op} {render(node.right)})"


@dataclass(frozen=True)
class Query:
    ast: Node
    patterns: tuple[TriplePattern, ...]
    variables: tuple[str, ...]
    text: str = ""


_UNSUPPORTED = {"UNION", "FILTER", "MINUS", "BIND", "VALUES", "GRAPH", "SERVICE", "ORDER", "LIMIT",
                "OFFSET", "DISTINCT", "REDUCED", "GROUP", "HAVING", "CONSTRUCT", "ASK", "DESCRIBE"}

_TOKEN = re.compile(
    rf"""(?P<ws>\s+|\#[^\n]*)
      |(?P<iri>{IRI_RE})
      |(?P<blank>{BLANK_RE})
      |(?P<literal>{LITERAL_RE})
      |(?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
      |(?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_][A-Za-z0-9_\-]*)?)
      |(?P<word>[A-Za-z][A-Za-z0-9_]*)
      |(?P<punct>[{{}}.*(),;])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    pos = 0
    line = 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(kind), line))  # type: ignore[arg-type]
        line += m.group(0).count("\n")
        pos = m.end()
    for tok in out:
        if tok.kind == "word" and tok.text.upper() in _UNSUPPORTED:
            raise UnsupportedFeatureError(f"unsupported feature: {tok.text.upper()}")
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.patterns: list[TriplePattern] = []

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def line(self) -> int | None:
        tok = self.peek() or (self.toks[-1] if self.toks else None)
        return tok.line if tok else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of query", self.line())
        self.i += 1
        return tok

    def is_word(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "word" and tok.text.upper() == word

    def is_punct(self, ch: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "punct" and tok.text == ch

    def expect_punct(self, ch: str) -> None:
        tok = self.next()
        if tok.kind != "punct" or tok.text != ch:
            raise ParseError(f"expected {ch!r}, found {tok.text!r}", tok.line)

    def parse(self) -> tuple[Node, list[str] | None]:
        while self.is_word("PREFIX"):
            self.next()
            name = self.next()
            iri = self.next()
            if name.kind != "pname" or not name.text.endswith(":") or iri.kind != "iri":
                raise ParseError("malformed PREFIX declaration", name.line)
            self.prefixes[name.text[:-1]] = iri.text[1:-1]
        if not self.is_word("SELECT"):
            raise ParseError("expected SELECT", self.line())
        self.next()
        selected: list[str] | None = None
        if self.is_punct("*"):
            self.next()
        else:
            selected = []
            while (tok := self.peek()) is not None and tok.kind == "var":
                selected.append(self.next().text[1:])
            if not selected:
                raise ParseError("expected '*' or variables after SELECT", self.line())
        if self.is_word("WHERE"):
            self.next()
        node = self.group()
        if self.peek() is not None:
            raise ParseError(f"unexpected trailing token {self.peek().text!r}", self.line())  # type: ignore[union-attr]
        return node, selected

    def group(self) -> Node:
        open_line = self.line()
        self.expect_punct("{")
        acc: Node | None = None
        pending: list[TriplePattern] = []

        def flush() -> None:
            nonlocal acc, pending
            if pending:
                bgp = Bgp(tuple(pending))
                acc = bgp if acc is None else Join(acc, bgp)
                pending = []

        while True:
            tok = self.peek()
            if tok is None:
                raise ParseError("unterminated group", open_line)
            if tok.kind == "punct" and tok.text == "}":
                self.next()
                break
            if tok.kind == "punct" and tok.text == ".":
                self.next()
                continue
            if tok.kind == "punct" and tok.text == "{":
                flush()
                sub = self.group()
                acc = sub if acc is None else Join(acc, sub)
                continue
            if tok.kind == "word" and tok.text.upper() == "OPTIONAL":
                self.next()
                flush()
                if acc is None:
                    raise ParseError("OPTIONAL needs a preceding pattern in its group", tok.line)
                acc = LeftJoin(acc, self.group())
                continue
            pending.append(self.triple())
        flush()
        if acc is None:
            raise ParseError("empty group", open_line)
        return acc

    def term(self, position: str) -> Slot:
        tok = self.next()
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "iri":
            return Term(TermKind.IRI, tok.text[1:-1])
        if tok.kind == "blank":
            return Term(TermKind.BLANK, tok.text[2:])
        if tok.kind == "literal":
            return Term(TermKind.LITERAL, tok.text)
        if tok.kind == "pname":
            prefix, _, local = tok.text.partition(":")
            if prefix not in self.prefixes:
                raise ParseError(f"undeclared prefix {prefix + ':'!r}", tok.line)
            return Term(TermKind.IRI, self.prefixes[prefix] + local)
        if tok.kind == "word" and tok.text == "a" and position == "p":
            return Term(TermKind.IRI, RDF_TYPE)
        raise ParseError(f"expected a term, found {tok.text!r}", tok.line)

    def triple(self) -> TriplePattern:
        line = self.line()
        s, p, o = self.term("s"), self.term("p"), self.term("o")
        if isinstance(p, Term) and p.kind is not TermKind.IRI:
            raise ParseError("predicate must be an IRI or a variable", line)
        names = [x.name for x in (s, p, o) if isinstance(x, Var)]
        if len(names) == 3:
            raise UnsupportedPatternError(f"line {line}: triple patterns with three variables are not supported")
        if len(set(names)) != len(names):
            raise UnsupportedPatternError(f"line {line}: a variable may occur only once per triple pattern")
        tp = TriplePattern(len(self.patterns), s, p, o)
        self.patterns.append(tp)
        return tp


def parse_query(text: str) -> Query:
    parser = _Parser(text)
    ast, selected = parser.parse()
    patterns = tuple(parser.patterns)
    appearing: list[str] = []
    for tp in patterns:
        for v in tp.variables():
            if v not in appearing:
                appearing.append(v)
    pred_vars = {tp.p.name for tp in patterns if isinstance(tp.p, Var)}
    so_vars = {x.name for tp in patterns for x in (tp.s, tp.o) if isinstance(x, Var)}
    if pred_vars & so_vars:
        raise UnsupportedPatternError(
            f"variables used both as predicate and as subject/object: {sorted(pred_vars & so_vars)}")
    if selected is not None:
        if set(selected) != set(appearing) or len(selected) != len(set(selected)):
            raise UnsupportedFeatureError("unsupported feature: SELECT must list every query variable once")
        variables = tuple(selected)
    else:
        variables = tuple(appearing)
    return Query(ast, patterns, variables, text)


def iter_nodes(node: Node) -> Iterator[Node]:
    """Post-order traversal (innermost first)."""
    if not isinstance(node, Bgp):
        yield from iter_nodes(node.left)
        yield from iter_nodes(node.right)
    yield node
