"""Compressed 2D bit-matrices and their two primitives, fold and unfold.

Rows use a hybrid encoding: run lengths (``[first_bit] r1 r2 ...``) or, when
the row has fewer set bits than it has runs, the list of set-bit positions.
Coordinates are 1-based; a Python ``int`` used as a bitset stores coordinate
``k`` in bit ``k`` (bit 0 is always clear).
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import CorruptionError, FormatError


class Encoding(enum.IntEnum):
    RUN_LENGTH = 0
    SET_POSITIONS = 1


class Dim(enum.Enum):
    ROW = "row"
    COL = "col"


class Family(enum.IntEnum):
    """Which slice of the bitcube a BitMat holds (sliced dimension in brackets)."""

    SO = 0  # S x O for a fixed predicate
    OS = 1  # O x S for a fixed predicate
    PS = 2  # P x S for a fixed object
    PO = 3  # P x O for a fixed subject


def _runs(bits: int, width: int) -> tuple[int, list[int]]:
    """Run lengths of a 1-based bitset; returns (first_bit, runs)."""
    if width == 0:
        return 0, []
    y = bits >> 1
    first = y & 1
    runs = []
    consumed = 0
    current = first
    while consumed < width:
        if current:
            n = (y ^ (y + 1)).bit_length() - 1  # trailing ones
        else:
            n = (y & -y).bit_length() - 1 if y else width - consumed
        n = min(n, width - consumed)
        runs.append(n)
        consumed += n
        y >>= n
        current ^= 1
    return first, runs


def _positions(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


@dataclass(frozen=True)
class BitRow:
    encoding: Encoding
    payload: tuple[int, ...]
    width: int

    @classmethod
    def from_int(cls, bits: int, width: int) -> "BitRow":
        count = bits.bit_count()
        first, runs = _runs(bits, width)
        if 0 < count < len(runs):
            return cls(Encoding.SET_POSITIONS, tuple(_positions(bits)), width)
        return cls(Encoding.RUN_LENGTH, (first, *runs), width)

    def to_int(self) -> int:
        self.validate()
        if self.encoding is Encoding.SET_POSITIONS:
            out = 0
            for p in self.payload:
                out |= 1 << p
            return out
        out = 0
        pos = 1
        current = self.payload[0]
        for run in self.payload[1:]:
            if current:
                out |= ((1 << run) - 1) << pos
            pos += run
            current ^= 1
        return out

    def validate(self) -> None:
        if self.encoding is Encoding.SET_POSITIONS:
            prev = 0
            for p in self.payload:
                if p <= prev or p > self.width:
                    raise CorruptionError(f"set positions not strictly increasing within width {self.width}")
                prev = p
            return
        if not self.payload or self.payload[0] not in (0, 1):
            raise CorruptionError("run-length row must start with a 0/1 flag")
        runs = self.payload[1:]
        if any(r < 1 for r in runs):
            raise CorruptionError("run lengths must be positive")
        if sum(runs) != self.width:
            raise CorruptionError(f"run lengths sum to {sum(runs)}, expected {self.width}")

    @property
    def popcount(self) -> int:
        if self.encoding is Encoding.SET_POSITIONS:
            return len(self.payload)
        return sum(self.payload[2::2]) if self.payload[0] == 0 else sum(self.payload[1::2])

    def size(self) -> int:
        """Number of integers in the stored form (the flag is not counted)."""
        if self.encoding is Encoding.SET_POSITIONS:
            return len(self.payload)
        return len(self.payload) - 1

    def or_into(self, acc: int) -> int:
        """OR this row into a bitset without materialising it bit by bit."""
        if self.encoding is Encoding.SET_POSITIONS:
            for p in self.payload:
                acc |= 1 << p
            return acc
        pos = 1
        current = self.payload[0]
        for run in self.payload[1:]:
            if current:
                acc |= ((1 << run) - 1) << pos
            pos += run
            current ^= 1
        return acc


def compress_row(plain_bits: Sequence[int | bool]) -> BitRow:
    bits = 0
    for i, b in enumerate(plain_bits, start=1):
        if b:
            bits |= 1 << i
    return BitRow.from_int(bits, len(plain_bits))


def decompress_row(row: BitRow) -> list[int]:
    bits = row.to_int()
    return [(bits >> i) & 1 for i in range(1, row.width + 1)]


def rle_size(plain_bits: Sequence[int | bool]) -> int:
    """Integer count of the pure run-length form, for comparison with the hybrid."""
    bits = 0
    for i, b in enumerate(plain_bits, start=1):
        if b:
            bits |= 1 << i
    return len(_runs(bits, len(plain_bits))[1])


@dataclass(frozen=True)
class BitArray:
    width: int
    bits: int = 0

    def __post_init__(self):
        if self.bits >> (self.width + 1) or self.bits & 1:
            raise ValueError("bit array has bits outside 1..width")

    @classmethod
    def ones(cls, width: int) -> "BitArray":
        return cls(width, ((1 << width) - 1) << 1)

    @classmethod
    def from_positions(cls, width: int, positions: Iterable[int]) -> "BitArray":
        bits = 0
        for p in positions:
            bits |= 1 << p
        return cls(width, bits)

    def __and__(self, other: "BitArray") -> "BitArray":
        if other.width != self.width:
            raise ValueError(f"width mismatch: {self.width} vs {other.width}")
        return BitArray(self.width, self.bits & other.bits)

    def __contains__(self, pos: int) -> bool:
        return bool((self.bits >> pos) & 1)

    def positions(self) -> list[int]:
        return list(_positions(self.bits))

    def count(self) -> int:
        return self.bits.bit_count()

    def resized(self, width: int) -> "BitArray":
        """Same bits viewed on an axis of another width (truncating if narrower)."""
        return BitArray(width, self.bits & (((1 << width) - 1) << 1))


@dataclass
class BitMat:
    family: Family
    slice_id: int
    row_dim: int
    col_dim: int
    rows: dict[int, BitRow] = field(default_factory=dict)
    row_mask: int = 0
    col_mask: int = 0
    triple_count: int = 0

    @classmethod
    def from_pairs(cls, family: Family, slice_id: int, row_dim: int, col_dim: int,
                   pairs: Iterable[tuple[int, int]]) -> "BitMat":
        acc: dict[int, int] = {}
        for r, c in pairs:
            if not (1 <= r <= row_dim and 1 <= c <= col_dim):
                raise ValueError(f"bit ({r},{c}) outside {row_dim}x{col_dim}")
            acc[r] = acc.get(r, 0) | (1 << c)
        return cls.from_row_bits(family, slice_id, row_dim, col_dim, acc)

    @classmethod
    def from_row_bits(cls, family: Family, slice_id: int, row_dim: int, col_dim: int,
                      row_bits: dict[int, int]) -> "BitMat":
        bm = cls(family, slice_id, row_dim, col_dim)
        bm.rows = {r: BitRow.from_int(b, col_dim) for r, b in sorted(row_bits.items()) if b}
        bm.refresh_meta()
        return bm

    def refresh_meta(self) -> None:
        self.row_mask = 0
        self.col_mask = 0
        self.triple_count = 0
        for r, row in self.rows.items():
            self.row_mask |= 1 << r
            self.col_mask = row.or_into(self.col_mask)
            self.triple_count += row.popcount

    def row_bits(self, r: int) -> int:
        row = self.rows.get(r)
        return row.to_int() if row is not None else 0

    def pairs(self) -> Iterator[tuple[int, int]]:
        for r in sorted(self.rows):
            for c in _positions(self.rows[r].to_int()):
                yield r, c

    def copy(self) -> "BitMat":
        return BitMat(self.family, self.slice_id, self.row_dim, self.col_dim, dict(self.rows),
                      self.row_mask, self.col_mask, self.triple_count)

    def transpose(self, family: Family) -> "BitMat":
        return BitMat.from_pairs(family, self.slice_id, self.col_dim, self.row_dim,
                                 ((c, r) for r, c in self.pairs()))

    def dim_size(self, dim: Dim) -> int:
        return self.row_dim if dim is Dim.ROW else self.col_dim

    def __len__(self) -> int:
        return self.triple_count


def fold(bm: BitMat, retain: Dim) -> BitArray:
    """Distinct coordinates present on ``retain``, i.e. the projection of the BitMat."""
    if retain is Dim.ROW:
        bits = 0
        for r in bm.rows:
            bits |= 1 << r
        return BitArray(bm.row_dim, bits)
    bits = 0
    for row in bm.rows.values():
        bits = row.or_into(bits)
    return BitArray(bm.col_dim, bits)


def unfold(bm: BitMat, mask: BitArray, retain: Dim) -> None:
    """Keep only the bits whose ``retain`` coordinate is set in ``mask`` (in place)."""
    if mask.width != bm.dim_size(retain):
        raise ValueError(f"mask width {mask.width} does not match {retain.value} size {bm.dim_size(retain)}")
    if retain is Dim.ROW:
        bm.rows = {r: row for r, row in bm.rows.items() if (mask.bits >> r) & 1}
    else:
        kept = {}
        for r, row in bm.rows.items():
            old = row.to_int()
            new = old & mask.bits
            if new == old:
                kept[r] = row
            elif new:
                kept[r] = BitRow.from_int(new, bm.col_dim)
        bm.rows = kept
    bm.refresh_meta()


# On-disk layout, little-endian:
#   magic "BMAT", version u32, family u32, slice id u32, row dim u32, col dim u32,
#   triple count u64, row mask (u32 byte length + bytes), col mask (same),
#   row count u32, then per row: row id u32, encoding u32, payload length u32, payload u32[].
_MAGIC = b"BMAT"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIQ")


def _mask_bytes(bits: int, width: int) -> bytes:
    return bits.to_bytes((width + 1 + 7) // 8, "little")


def encode_bitmat(bm: BitMat) -> bytes:
    out = bytearray(_HEADER.pack(_MAGIC, _VERSION, int(bm.family), bm.slice_id, bm.row_dim,
                                 bm.col_dim, bm.triple_count))
    for bits, width in ((bm.row_mask, bm.row_dim), (bm.col_mask, bm.col_dim)):
        data = _mask_bytes(bits, width)
        out += struct.pack("<I", len(data)) + data
    out += struct.pack("<I", len(bm.rows))
    for r in sorted(bm.rows):
        row = bm.rows[r]
        out += struct.pack(f"<III{len(row.payload)}I", r, int(row.encoding), len(row.payload), *row.payload)
    return bytes(out)


def decode_bitmat(data: bytes, source: str = "<bytes>") -> BitMat:
    try:
        magic, version, family, slice_id, row_dim, col_dim, count = _HEADER.unpack_from(data, 0)
        if magic != _MAGIC:
            raise FormatError(f"{source}: not a BitMat file")
        if version != _VERSION:
            raise FormatError(f"{source}: unsupported BitMat version {version}")
        pos = _HEADER.size
        masks = []
        for _ in range(2):
            (n,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + n > len(data):
                raise FormatError(f"{source}: truncated mask")
            masks.append(int.from_bytes(data[pos : pos + n], "little"))
            pos += n
        (nrows,) = struct.unpack_from("<I", data, pos)
        pos += 4
        rows = {}
        for _ in range(nrows):
            r, enc, n = struct.unpack_from("<III", data, pos)
            pos += 12
            payload = struct.unpack_from(f"<{n}I", data, pos)
            pos += 4 * n
            rows[r] = BitRow(Encoding(enc), tuple(payload), col_dim)
    except struct.error as exc:
        raise FormatError(f"{source}: truncated BitMat file") from exc
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc
    if pos != len(data):
        raise FormatError(f"{source}: trailing bytes")
    bm = BitMat(Family(family), slice_id, row_dim, col_dim, rows)
    bm.refresh_meta()
    if (bm.row_mask, bm.col_mask, bm.triple_count) != (masks[0], masks[1], count):
        raise FormatError(f"{source}: metadata does not match rows")
    return bm


def write_bitmat(bm: BitMat, path: str | Path) -> None:
    Path(path).write_bytes(encode_bitmat(bm))


def read_bitmat(path: str | Path) -> BitMat:
    return decode_bitmat(Path(path).read_bytes(), str(path))
