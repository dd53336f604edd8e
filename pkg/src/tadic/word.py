"""Residues modulo 2**k and finite binary sequences.

A :class:`Word` is a k-bit window onto a 2-adic integer: every operation
reduces its result modulo ``2**width``.  Negative integers enter through
their two's-complement residue, so ``-1`` at width 4 is ``0b1111``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

MAX_WIDTH = 64


class WidthMismatch(ValueError):
    pass


class NotAUnit(ArithmeticError):
    """Raised when an even residue is inverted."""


class NotATFunction(ArithmeticError):
    """Raised for ``base ** exp`` with an even base and a non-literal exponent."""


class Valuation(enum.Enum):
    INFINITE = "inf"

    def __repr__(self) -> str:
        return "Valuation.INFINITE"


INFINITE = Valuation.INFINITE


def _check_width(width: int) -> int:
    if not isinstance(width, (int, np.integer)) or not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"width must be an integer in [1, {MAX_WIDTH}], got {width!r}")
    return int(width)


def mask(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True)
class Word:
    """An element of Z/2**width."""

    value: int
    width: int

    def __post_init__(self) -> None:
        w = _check_width(self.width)
        object.__setattr__(self, "width", w)
        object.__setattr__(self, "value", int(self.value) & mask(w))

    @classmethod
    def of(cls, value: int | Fraction, width: int) -> "Word":
        """Residue of an integer or of an odd-denominator fraction."""
        if isinstance(value, Fraction):
            num, den = value.numerator, value.denominator
            if den % 2 == 0:
                raise NotAUnit(f"{value} is not a 2-adic integer")
            return mul(cls(num, width), inv_odd(cls(den, width)))
        return cls(value, width)

    def signed(self) -> int:
        """Two's-complement reading of the residue."""
        if self.value >> (self.width - 1):
            return self.value - (1 << self.width)
        return self.value

    def bits(self) -> str:
        """Bits from most to least significant."""
        return format(self.value, f"0{self.width}b")

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __add__(self, other: "Word") -> "Word":
        return add(self, other)

    def __sub__(self, other: "Word") -> "Word":
        return sub(self, other)

    def __mul__(self, other: "Word") -> "Word":
        return mul(self, other)

    def __neg__(self) -> "Word":
        return Word(-self.value, self.width)

    def __invert__(self) -> "Word":
        return Word(~self.value, self.width)

    def __and__(self, other: "Word") -> "Word":
        return Word(self.value & _same(self, other).value, self.width)

    def __or__(self, other: "Word") -> "Word":
        return Word(self.value | _same(self, other).value, self.width)

    def __xor__(self, other: "Word") -> "Word":
        return Word(self.value ^ _same(self, other).value, self.width)


def _same(a: Word, b: Word) -> Word:
    if a.width != b.width:
        raise WidthMismatch(f"width {a.width} != {b.width}")
    return b


def add(a: Word, b: Word) -> Word:
    return Word(a.value + _same(a, b).value, a.width)


def sub(a: Word, b: Word) -> Word:
    return Word(a.value - _same(a, b).value, a.width)


def mul(a: Word, b: Word) -> Word:
    return Word(a.value * _same(a, b).value, a.width)


def inv_odd(a: Word) -> Word:
    if not a.value & 1:
        raise NotAUnit(f"{a.value} is even; no inverse modulo 2**{a.width}")
    # Newton: each step doubles the number of correct low bits (a*a == 1 mod 8).
    x = a.value
    for _ in range(6):
        x = (x * (2 - a.value * x)) & mask(a.width)
    return Word(x, a.width)


def pow_mod(base: Word, exp: Word | int, literal: bool = False) -> Word:
    """``base ** exp`` modulo ``2**width``.

    With an odd base the exponent is reduced modulo ``2**(width-1)``; that is a
    multiple of the exponent of the unit group at every width.  An even base is
    only allowed when ``literal`` says the exponent is a nonnegative literal.
    """
    e = exp.value if isinstance(exp, Word) else int(exp)
    if isinstance(exp, Word):
        _same(base, exp)
    if base.value & 1:
        e &= mask(base.width - 1)
        return Word(pow(base.value, e, 1 << base.width), base.width)
    if not literal:
        raise NotATFunction(
            f"even base {base.value} needs a literal exponent to stay a T-function"
        )
    if e < 0:
        raise NotAUnit("negative power of an even base")
    if e >= base.width:
        return Word(0, base.width)
    return Word(pow(base.value, e, 1 << base.width), base.width)


def delta(x: Word, j: int) -> int:
    """Bit ``j`` of ``x``."""
    if not 0 <= j < x.width:
        raise IndexError(f"bit {j} out of range for width {x.width}")
    return (x.value >> j) & 1


def ord2(x: Word) -> int | Valuation:
    if x.value == 0:
        return INFINITE
    return (x.value & -x.value).bit_length() - 1


def dist2(a: Word, b: Word) -> Fraction:
    """2-adic distance ``2**-ord2(a-b)`` as an exact fraction; 0 when equal."""
    v = ord2(sub(a, b))
    if v is INFINITE:
        return Fraction(0)
    return Fraction(1, 1 << v)


# ---------------------------------------------------------------- BitSeq


@dataclass(frozen=True, eq=False)
class BitSeq:
    """A finite binary sequence, optionally tagged with its coordinate index.

    ``bits[i]`` is the sequence element at position ``start + i``.
    """

    bits: np.ndarray
    coord: int | None = None
    start: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("a BitSeq holds a nonempty 1-D sequence")
        if arr.size and arr.max(initial=0) > 1:
            raise ValueError("bits must be 0 or 1")
        if self.start < 0:
            raise ValueError("start must be nonnegative")
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def length(self) -> int:
        return int(self.bits.size)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i):
        return self.bits[i]

    def __iter__(self) -> Iterator[int]:
        return iter(int(b) for b in self.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitSeq):
            return NotImplemented
        return (
            self.coord == other.coord
            and self.start == other.start
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self) -> int:
        return hash((self.coord, self.start, self.bits.tobytes()))

    def __repr__(self) -> str:
        body = self.to_string()
        if len(body) > 32:
            body = body[:32] + "..."
        return f"BitSeq({body!r}, coord={self.coord}, start={self.start}, len={self.length})"

    def complement(self) -> "BitSeq":
        return BitSeq(self.bits ^ 1, self.coord, self.start)

    def to_string(self) -> str:
        return (self.bits + ord("0")).tobytes().decode("ascii")

    @classmethod
    def from_string(cls, text: str, coord: int | None = None, start: int = 0) -> "BitSeq":
        raw = np.frombuffer(text.strip().encode("ascii"), dtype=np.uint8)
        if raw.size == 0 or not np.all((raw == 48) | (raw == 49)):
            raise ValueError("bit strings contain only '0' and '1'")
        return cls(raw - 48, coord, start)

    def header(self) -> str | None:
        if self.coord is None and self.start == 0:
            return None
        coord = "-" if self.coord is None else str(self.coord)
        return f"# coord={coord} start={self.start} len={self.length}"


# Text format: an optional header line "# coord=<n> start=<i> len=<L>" followed
# by one line of '0'/'1' characters, leftmost character = earliest position.


def _parse_header(line: str) -> dict:
    fields = dict(part.split("=", 1) for part in line[1:].split())
    missing = {"coord", "start", "len"} - fields.keys()
    if missing:
        raise ValueError(f"bit header missing {sorted(missing)}: {line!r}")
    coord = None if fields["coord"] == "-" else int(fields["coord"])
    return {"coord": coord, "start": int(fields["start"]), "len": int(fields["len"])}


def loads_bitseqs(text: str) -> list[BitSeq]:
    out: list[BitSeq] = []
    pending: dict | None = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            pending = _parse_header(line)
            continue
        seq = BitSeq.from_string(
            line,
            coord=pending["coord"] if pending else None,
            start=pending["start"] if pending else 0,
        )
        if pending and pending["len"] != seq.length:
            raise ValueError(
                f"line {lineno}: header says len={pending['len']}, found {seq.length} bits"
            )
        out.append(seq)
        pending = None
    return out


def dumps_bitseqs(seqs: Iterable[BitSeq]) -> str:
    lines: list[str] = []
    for s in seqs:
        h = s.header()
        if h is not None:
            lines.append(h)
        lines.append(s.to_string())
    return "".join(line + "\n" for line in lines)


def read_bitseqs(path: str | Path) -> list[BitSeq]:
    return loads_bitseqs(Path(path).read_text(encoding="ascii"))


def write_bitseqs(path: str | Path, seqs: Iterable[BitSeq]) -> None:
    Path(path).write_text(dumps_bitseqs(seqs), encoding="ascii")


def read_bitseq(path: str | Path) -> BitSeq:
    seqs = read_bitseqs(path)
    if len(seqs) != 1:
        raise ValueError(f"{path}: expected one sequence, found {len(seqs)}")
    return seqs[0]
