"""N-Triples ingestion and the term <-> coordinate dictionary.

Subjects and objects share one coordinate space for the terms they have in
common: the terms of ``V_so = V_s & V_o`` take ids ``1..|V_so|`` on both axes,
subject-only terms continue from ``|V_so|+1`` on the subject axis and
object-only terms from ``|V_so|+1`` on the object axis.  Predicates live in an
independent ``1..|V_p|`` space.
"""
from __future__ import annotations

import enum
import io
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

from .errors import FormatError, ParseError


class TermKind(enum.IntEnum):
    IRI = 0
    BLANK = 1
    LITERAL = 2


@dataclass(frozen=True, order=True)
class Term:
    """An RDF term.

    ``lexical`` is the IRI without angle brackets, the blank node label without
    ``_:``, or the literal exactly as written (quotes, language tag and datatype
    included).
    """

    kind: TermKind
    lexical: str

    def __post_init__(self):
        if not self.lexical:
            raise ValueError("term lexical form must be non-empty")

    @classmethod
    def iri(cls, value: str) -> "Term":
        return cls(TermKind.IRI, value)

    @classmethod
    def blank(cls, label: str) -> "Term":
        return cls(TermKind.BLANK, label)

    @classmethod
    def literal(cls, text: str) -> "Term":
        """Build a plain literal from unquoted text."""
        escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return cls(TermKind.LITERAL, f'"{escaped}"')

    def n3(self) -> str:
        if self.kind is TermKind.IRI:
            return f"<{self.lexical}>"
        if self.kind is TermKind.BLANK:
            return f"_:{self.lexical}"
        return self.lexical

    def __str__(self) -> str:
        return self.n3()


class Space(str, enum.Enum):
    """Coordinate axis of the conceptual bitcube."""

    S = "S"
    P = "P"
    O = "O"


TermTriple = tuple[Term, Term, Term]

# Term syntax shared with the query tokenizer.
IRI_RE = r"<([^<>\"{}|^`\\\s]*)>"
BLANK_RE = r"_:([A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)"
LITERAL_RE = r"(\"(?:[^\"\\\n\r]|\\.)*\"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>\"{}|^`\\\s]*>)?)"

_TERM = re.compile(rf"\s*(?:{IRI_RE}|{BLANK_RE}|{LITERAL_RE})")
_END = re.compile(r"\s*\.\s*(?:#.*)?$")


def _read_term(line: str, pos: int, lineno: int) -> tuple[Term, int]:
    m = _TERM.match(line, pos)
    if not m:
        raise ParseError(f"expected an RDF term at column {pos + 1}", lineno)
    if m.group(1) is not None:
        if not m.group(1):
            raise ParseError("empty IRI", lineno)
        return Term(TermKind.IRI, m.group(1)), m.end()
    if m.group(2) is not None:
        return Term(TermKind.BLANK, m.group(2)), m.end()
    return Term(TermKind.LITERAL, m.group(3)), m.end()


def parse_ntriples(stream: BinaryIO | bytes | str | Iterable[str]) -> Iterator[TermTriple]:
    """Yield one term triple per data line.

    Accepts a binary stream, raw bytes, a string or an iterable of lines.
    Duplicate lines are preserved.
    """
    if isinstance(stream, bytes):
        lines: Iterable[str] = stream.decode("utf-8").splitlines()
    elif isinstance(stream, str):
        lines = stream.splitlines()
    elif hasattr(stream, "read"):
        lines = io.TextIOWrapper(stream, encoding="utf-8")  # type: ignore[arg-type]
    else:
        lines = stream
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        s, pos = _read_term(line, 0, lineno)
        p, pos = _read_term(line, pos, lineno)
        o, pos = _read_term(line, pos, lineno)
        if not _END.match(line, pos):
            raise ParseError("expected '.' after object", lineno)
        if p.kind is not TermKind.IRI:
            raise ParseError("predicate must be an IRI", lineno)
        if s.kind is TermKind.LITERAL:
            raise ParseError("literal in subject position", lineno)
        yield (s, p, o)


@dataclass(frozen=True, order=True)
class EncodedTriple:
    s: int
    p: int
    o: int


@dataclass
class Dictionary:
    """Immutable bidirectional mapping between terms and bitcube coordinates."""

    so_terms: list[Term] = field(default_factory=list)
    s_only_terms: list[Term] = field(default_factory=list)
    o_only_terms: list[Term] = field(default_factory=list)
    p_terms: list[Term] = field(default_factory=list)

    def __post_init__(self):
        so = len(self.so_terms)
        self._so_index = {t: i for i, t in enumerate(self.so_terms, start=1)}
        self._s_index = dict(self._so_index)
        self._s_index.update({t: so + i for i, t in enumerate(self.s_only_terms, start=1)})
        self._o_index = dict(self._so_index)
        self._o_index.update({t: so + i for i, t in enumerate(self.o_only_terms, start=1)})
        self._p_index = {t: i for i, t in enumerate(self.p_terms, start=1)}

    @property
    def so_count(self) -> int:
        return len(self.so_terms)

    @property
    def s_count(self) -> int:
        return len(self.so_terms) + len(self.s_only_terms)

    @property
    def o_count(self) -> int:
        return len(self.so_terms) + len(self.o_only_terms)

    @property
    def p_count(self) -> int:
        return len(self.p_terms)

    def size(self, space: Space) -> int:
        return {Space.S: self.s_count, Space.O: self.o_count, Space.P: self.p_count}[space]

    def encode(self, term: Term, space: Space) -> int | None:
        """Coordinate of ``term`` on ``space``, or None if it never occurs there."""
        index = {Space.S: self._s_index, Space.O: self._o_index, Space.P: self._p_index}[space]
        return index.get(term)

    def decode(self, ident: int, space: Space) -> Term:
        so = self.so_count
        if not 1 <= ident <= self.size(space):
            raise KeyError(f"id {ident} out of range for space {space.value}")
        if space is Space.P:
            return self.p_terms[ident - 1]
        if ident <= so:
            return self.so_terms[ident - 1]
        rest = self.s_only_terms if space is Space.S else self.o_only_terms
        return rest[ident - so - 1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        return (
            self.so_terms == other.so_terms
            and self.s_only_terms == other.s_only_terms
            and self.o_only_terms == other.o_only_terms
            and self.p_terms == other.p_terms
        )


def build_dictionary(triples: Iterable[TermTriple]) -> tuple[Dictionary, set[EncodedTriple]]:
    """Assign coordinates honouring the shared S/O layout.

    Within each partition ids follow first occurrence in the input stream.
    """
    triples = list(triples)
    first_seen: dict[Term, int] = {}
    subjects: set[Term] = set()
    objects: set[Term] = set()
    predicates: dict[Term, None] = {}
    for s, p, o in triples:
        for t in (s, o):
            first_seen.setdefault(t, len(first_seen))
        subjects.add(s)
        objects.add(o)
        predicates.setdefault(p, None)
    ordered = sorted(first_seen, key=first_seen.__getitem__)
    so_terms = [t for t in ordered if t in subjects and t in objects]
    s_only = [t for t in ordered if t in subjects and t not in objects]
    o_only = [t for t in ordered if t in objects and t not in subjects]
    d = Dictionary(so_terms, s_only, o_only, list(predicates))
    encoded = {
        EncodedTriple(d.encode(s, Space.S), d.encode(p, Space.P), d.encode(o, Space.O))  # type: ignore[arg-type]
        for s, p, o in triples
    }
    return d, encoded


_MAGIC = b"BSDICT\x00\x00"
_VERSION = 1


def persist_dictionary(d: Dictionary, path: str | Path) -> None:
    buf = bytearray(_MAGIC)
    buf += struct.pack("<I", _VERSION)
    buf += struct.pack("<4Q", d.so_count, d.s_count, d.o_count, d.p_count)
    for term in (*d.so_terms, *d.s_only_terms, *d.o_only_terms, *d.p_terms):
        data = term.lexical.encode("utf-8")
        buf += struct.pack("<BI", int(term.kind), len(data))
        buf += data
    Path(path).write_bytes(bytes(buf))


def load_dictionary(path: str | Path) -> Dictionary:
    data = Path(path).read_bytes()
    if len(data) < len(_MAGIC) + 4 + 32 or not data.startswith(_MAGIC):
        raise FormatError(f"{path}: not a dictionary file")
    (version,) = struct.unpack_from("<I", data, len(_MAGIC))
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported dictionary version {version}")
    so, s, o, p = struct.unpack_from("<4Q", data, len(_MAGIC) + 4)
    if so > min(s, o):
        raise FormatError(f"{path}: inconsistent counts")
    pos = len(_MAGIC) + 36

    def read(n: int) -> list[Term]:
        nonlocal pos
        out = []
        for _ in range(n):
            if pos + 5 > len(data):
                raise FormatError(f"{path}: truncated term record")
            kind, length = struct.unpack_from("<BI", data, pos)
            pos += 5
            if pos + length > len(data):
                raise FormatError(f"{path}: truncated term record")
            try:
                out.append(Term(TermKind(kind), data[pos : pos + length].decode("utf-8")))
            except ValueError as exc:
                raise FormatError(f"{path}: bad term record: {exc}") from exc
            pos += length
        return out

    d = Dictionary(read(so), read(s - so), read(o - so), read(p))
    if pos != len(data):
        raise FormatError(f"{path}: trailing bytes after term records")
    return d
