"""On-disk index: dictionary, the four BitMat families and a triple-count manifest.

Directory layout::

    index_dir/dictionary.bin
    index_dir/manifest.tsv            family, slice id, triple count
    index_dir/bitmats/<FAMILY>/<slice id>.bm
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .bitmat import BitArray, BitMat, Dim, Family, read_bitmat, unfold, write_bitmat
from .dictionary import Dictionary, EncodedTriple, Space, Term, load_dictionary, persist_dictionary
from .errors import FormatError, UnsupportedPatternError
from .query import TriplePattern, Var

# (row space, column space) of each family
FAMILY_SPACES = {
    Family.SO: (Space.S, Space.O),
    Family.OS: (Space.O, Space.S),
    Family.PS: (Space.P, Space.S),
    Family.PO: (Space.P, Space.O),
}


@dataclass
class IndexManifest:
    counts: dict[tuple[Family, int], int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.counts)

    def count(self, family: Family, slice_id: int) -> int:
        return self.counts.get((family, slice_id), 0)

    def write(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["family", "slice_id", "triple_count"])
            for (fam, sid), n in sorted(self.counts.items()):
                w.writerow([fam.name, sid, n])

    @classmethod
    def read(cls, path: Path) -> "IndexManifest":
        counts = {}
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh, delimiter="\t"))
            if not rows or rows[0] != ["family", "slice_id", "triple_count"]:
                raise FormatError(f"{path}: bad manifest header")
            for row in rows[1:]:
                fam, sid, n = row
                counts[(Family[fam], int(sid))] = int(n)
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: bad manifest row: {exc}") from exc
        return cls(counts)


def _slices(d: Dictionary, triples: Iterable[EncodedTriple]) -> dict[tuple[Family, int], BitMat]:
    acc: dict[tuple[Family, int], dict[int, int]] = {}

    def put(fam: Family, sid: int, r: int, c: int) -> None:
        rows = acc.setdefault((fam, sid), {})
        rows[r] = rows.get(r, 0) | (1 << c)

    for t in triples:
        put(Family.SO, t.p, t.s, t.o)
        put(Family.OS, t.p, t.o, t.s)
        put(Family.PS, t.o, t.p, t.s)
        put(Family.PO, t.s, t.p, t.o)
    out = {}
    for (fam, sid), rows in acc.items():
        rs, cs = FAMILY_SPACES[fam]
        out[(fam, sid)] = BitMat.from_row_bits(fam, sid, d.size(rs), d.size(cs), rows)
    return out


def bitmat_path(index_dir: Path, family: Family, slice_id: int) -> Path:
    return Path(index_dir) / "bitmats" / family.name / f"{slice_id}.bm"


def build_indexes(d: Dictionary, triples: Iterable[EncodedTriple], out_dir: str | Path) -> IndexManifest:
    out = Path(out_dir)
    for fam in Family:
        (out / "bitmats" / fam.name).mkdir(parents=True, exist_ok=True)
    persist_dictionary(d, out / "dictionary.bin")
    manifest = IndexManifest()
    for (fam, sid), bm in sorted(_slices(d, triples).items()):
        write_bitmat(bm, bitmat_path(out, fam, sid))
        manifest.counts[(fam, sid)] = bm.triple_count
    manifest.write(out / "manifest.tsv")
    return manifest


class Index:
    """Read access to a built index.  ``load`` always hands out a private copy."""

    def __init__(self, d: Dictionary, manifest: IndexManifest, directory: Path | None = None,
                 bitmats: Mapping[tuple[Family, int], BitMat] | None = None):
        self.dictionary = d
        self.manifest = manifest
        self.directory = directory
        self._cache: dict[tuple[Family, int], BitMat] = dict(bitmats or {})

    @classmethod
    def open(cls, index_dir: str | Path) -> "Index":
        path = Path(index_dir)
        if not (path / "dictionary.bin").exists() or not (path / "manifest.tsv").exists():
            raise FormatError(f"{path}: not an index directory")
        return cls(load_dictionary(path / "dictionary.bin"), IndexManifest.read(path / "manifest.tsv"), path)

    @classmethod
    def in_memory(cls, d: Dictionary, triples: Iterable[EncodedTriple]) -> "Index":
        slices = _slices(d, triples)
        return cls(d, IndexManifest({k: bm.triple_count for k, bm in slices.items()}), None, slices)

    def count(self, family: Family, slice_id: int) -> int:
        return self.manifest.count(family, slice_id)

    def load(self, family: Family, slice_id: int) -> BitMat:
        key = (family, slice_id)
        if key not in self._cache:
            if self.manifest.count(family, slice_id) == 0 or self.directory is None:
                rs, cs = FAMILY_SPACES[family]
                return BitMat(family, slice_id, self.dictionary.size(rs), self.dictionary.size(cs))
            bm = read_bitmat(bitmat_path(self.directory, family, slice_id))
            if bm.family is not family or bm.slice_id != slice_id:
                raise FormatError(f"BitMat file for {family.name}/{slice_id} holds another slice")
            self._cache[key] = bm
        return self._cache[key].copy()


@dataclass
class PatternMatrix:
    """The BitMat loaded for one triple pattern, with the variable on each axis.

    A pattern with two constants is held as a single-row matrix whose row axis
    carries no variable.  ``row_var``/``col_var`` are None for constant axes.
    """

    tp: TriplePattern
    bm: BitMat
    row_var: str | None
    col_var: str | None
    row_space: Space
    col_space: Space

    def dim_of(self, var: str) -> Dim:
        if var == self.row_var:
            return Dim.ROW
        if var == self.col_var:
            return Dim.COL
        raise KeyError(var)

    def space_of(self, var: str) -> Space:
        return self.row_space if self.dim_of(var) is Dim.ROW else self.col_space

    def triples(self, d: Dictionary) -> set[tuple[Term, Term, Term]]:
        """Decoded (s, p, o) triples still held by this pattern."""
        out = set()
        for r, c in self.bm.pairs():
            binding = {}
            if self.row_var is not None:
                binding[self.row_var] = d.decode(r, self.row_space)
            if self.col_var is not None:
                binding[self.col_var] = d.decode(c, self.col_space)
            s, p, o = (binding[x.name] if isinstance(x, Var) else x for x in self.tp.slots)
            out.add((s, p, o))
        return out


def convert_mask(mask: BitArray, src: Space, dst: Space, d: Dictionary) -> BitArray:
    """Reinterpret bindings from one coordinate space on another.

    Only ids 1..|V_so| denote the same term on the S and O axes, so a mask moving
    between them is cut down to that shared range.
    """
    if src is dst:
        return mask
    if Space.P in (src, dst):
        raise ValueError("cannot move bindings between the predicate and subject/object spaces")
    return mask.resized(d.so_count).resized(d.size(dst))


def _single_row(bm: BitMat, row: int | None, family: Family, slice_id: int) -> BitMat:
    bits = bm.row_bits(row) if row is not None else 0
    return BitMat.from_row_bits(family, slice_id, 1, bm.col_dim, {1: bits} if bits else {})


def _const(d: Dictionary, slot, space: Space) -> int | None:
    return d.encode(slot, space) if not isinstance(slot, Var) else None


def estimate_count(index: Index, tp: TriplePattern) -> int:
    """Upper bound on the pattern's matches from manifest counts alone."""
    d = index.dictionary
    s, p, o = tp.slots
    bounds = []
    for slot, space, fam in ((s, Space.S, Family.PO), (p, Space.P, Family.SO), (o, Space.O, Family.PS)):
        if isinstance(slot, Var):
            continue
        ident = d.encode(slot, space)
        if ident is None:
            return 0
        bounds.append(index.count(fam, ident))
    return min(bounds) if bounds else 0


def load_bitmat_for_tp(index: Index, tp: TriplePattern, row_first: str | None = None,
                       active_masks: Iterable[tuple[str, BitArray, Space]] | None = None) -> PatternMatrix:
    """Load the BitMat answering ``tp`` and apply any active-pruning masks.

    For ``?a :p ?b`` the variable named by ``row_first`` becomes the row axis
    (SO when it is ``?a``, OS when it is ``?b``).
    """
    d = index.dictionary
    s, p, o = tp.slots
    names = tp.variables()
    if len(names) == 3:
        raise UnsupportedPatternError(f"{tp.label}: triple patterns with three variables are not supported")
    sv = s.name if isinstance(s, Var) else None
    pv = p.name if isinstance(p, Var) else None
    ov = o.name if isinstance(o, Var) else None
    sid, pid, oid = _const(d, s, Space.S), _const(d, p, Space.P), _const(d, o, Space.O)
    missing = any(not isinstance(x, Var) and i is None for x, i in ((s, sid), (p, pid), (o, oid)))

    def empty(fam: Family, rows: int, cols: int) -> BitMat:
        return BitMat(fam, 0, rows, cols)

    if sv and ov:
        if row_first == ov:
            pm = PatternMatrix(tp, empty(Family.OS, d.o_count, d.s_count) if missing else index.load(Family.OS, pid),
                               ov, sv, Space.O, Space.S)
        else:
            pm = PatternMatrix(tp, empty(Family.SO, d.s_count, d.o_count) if missing else index.load(Family.SO, pid),
                               sv, ov, Space.S, Space.O)
    elif sv and pv:
        pm = PatternMatrix(tp, empty(Family.PS, d.p_count, d.s_count) if missing else index.load(Family.PS, oid),
                           pv, sv, Space.P, Space.S)
    elif pv and ov:
        pm = PatternMatrix(tp, empty(Family.PO, d.p_count, d.o_count) if missing else index.load(Family.PO, sid),
                           pv, ov, Space.P, Space.O)
    elif sv:
        bm = empty(Family.PS, 1, d.s_count) if missing else _single_row(index.load(Family.PS, oid), pid, Family.PS, oid)
        pm = PatternMatrix(tp, bm, None, sv, Space.P, Space.S)
    elif ov:
        bm = empty(Family.PO, 1, d.o_count) if missing else _single_row(index.load(Family.PO, sid), pid, Family.PO, sid)
        pm = PatternMatrix(tp, bm, None, ov, Space.P, Space.O)
    elif pv:
        # (:s ?p :o): column :o of PO(:s), laid out as one row over predicates
        if missing:
            bm = empty(Family.PO, 1, d.p_count)
        else:
            src = index.load(Family.PO, sid)
            preds = {r for r, c in src.pairs() if c == oid}
            bm = BitMat.from_pairs(Family.PO, sid, 1, d.p_count, ((1, r) for r in preds))
        pm = PatternMatrix(tp, bm, None, pv, Space.P, Space.P)
    else:
        present = not missing and bool((index.load(Family.PO, sid).row_bits(pid) >> oid) & 1)
        bm = BitMat.from_pairs(Family.PO, sid or 0, 1, 1, [(1, 1)] if present else [])
        pm = PatternMatrix(tp, bm, None, None, Space.P, Space.P)
    for var, mask, space in active_masks or ():
        apply_mask(pm, var, mask, space, d)
    return pm


def apply_mask(pm: PatternMatrix, var: str, mask: BitArray, space: Space, d: Dictionary) -> None:
    """Unfold ``pm`` on ``var`` with bindings given in ``space``."""
    unfold(pm.bm, convert_mask(mask, space, pm.space_of(var), d), pm.dim_of(var))
