from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tadic.word import (
    INFINITE, BitSeq, NotATFunction, NotAUnit, Word, WidthMismatch, add, delta, dist2,
    dumps_bitseqs, inv_odd, loads_bitseqs, mul, ord2, pow_mod, read_bitseq, sub,
    write_bitseqs,
)

widths = st.integers(min_value=1, max_value=64)


@st.composite
def words(draw, width=None):
    w = draw(widths) if width is None else width
    return Word(draw(st.integers(min_value=0, max_value=(1 << w) - 1)), w)


def test_add_sub_mul_examples():
    assert add(Word(3, 4), Word(13, 4)) == Word(0, 4)
    assert mul(Word(5, 4), Word(3, 4)) == Word(15, 4)
    assert sub(Word(0, 4), Word(1, 4)) == Word(15, 4)
    assert Word(-1, 4).bits() == "1111"


def test_mixed_width_rejected():
    with pytest.raises(WidthMismatch):
        add(Word(1, 4), Word(1, 5))
    with pytest.raises(WidthMismatch):
        _ = Word(1, 4) ^ Word(1, 8)


@pytest.mark.parametrize("width", [0, 65, -3])
def test_width_range(width):
    with pytest.raises(ValueError):
        Word(0, width)


def test_inv_odd_examples():
    assert inv_odd(Word(3, 4)) == Word(0b1011, 4)
    assert inv_odd(Word(1, 17)) == Word(1, 17)
    assert sub(Word(0, 4), inv_odd(Word(3, 4))) == Word(5, 4)
    assert Word.of(Fraction(1, 3), 8).bits() == "10101011"
    assert Word.of(Fraction(-1, 3), 7).bits() == "1010101"
    with pytest.raises(NotAUnit):
        inv_odd(Word(6, 8))
    with pytest.raises(NotAUnit):
        Word.of(Fraction(1, 2), 8)


def test_pow_examples():
    assert pow_mod(Word(3, 4), 2) == Word(9, 4)
    for a in range(1, 256, 2):
        assert pow_mod(Word(a, 8), 0) == Word(1, 8)
    assert pow_mod(Word(3, 8), 3 + (1 << 7)) == pow_mod(Word(3, 8), 3)
    assert pow_mod(Word(3, 8), 3 + (1 << 7)).value == pow(3, 3 + 128, 256)


def test_pow_even_base():
    with pytest.raises(NotATFunction):
        pow_mod(Word(2, 8), Word(3, 8))
    assert pow_mod(Word(2, 8), 3, literal=True) == Word(8, 8)
    assert pow_mod(Word(2, 8), 8, literal=True) == Word(0, 8)
    assert pow_mod(Word(6, 8), 0, literal=True) == Word(1, 8)


@pytest.mark.parametrize("width", [1, 2, 3])
def test_pow_small_widths_match_direct_power(width):
    # The exponent reduction is exact even where the unit group argument degenerates.
    m = 1 << width
    for a in range(1, m, 2):
        for e in range(0, 40):
            assert pow_mod(Word(a, width), e).value == pow(a, e, m)


def test_delta_ord_dist_examples():
    assert delta(Word(12, 8), 2) == 1
    assert delta(Word(12, 8), 1) == 0
    with pytest.raises(IndexError):
        delta(Word(12, 4), 4)
    assert ord2(Word(12, 8)) == 2
    assert ord2(Word(0, 8)) is INFINITE
    assert dist2(Word(3, 4), Word(11, 4)) == Fraction(1, 8)
    assert dist2(Word(3, 4), Word.of(Fraction(1, 3), 4)) == Fraction(1, 8)
    assert dist2(Word(7, 4), Word(7, 4)) == 0


@pytest.mark.parametrize("width", [1, 3, 6])
def test_ring_laws_exhaustive(width):
    vals = [Word(v, width) for v in range(1 << width)]
    m = 1 << width
    for a, b in product(vals, repeat=2):
        assert add(a, b).value == (a.value + b.value) % m
        assert mul(a, b).value == (a.value * b.value) % m
    if width <= 3:
        for a, b, c in product(vals, repeat=3):
            assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
            assert mul(mul(a, b), c) == mul(a, mul(b, c))


def test_ring_laws_width_8_sampled():
    rng = np.random.default_rng(1)
    for a, b, c in rng.integers(0, 256, size=(3000, 3)).tolist():
        a, b, c = Word(a, 8), Word(b, 8), Word(c, 8)
        assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
        assert add(add(a, b), c) == add(a, add(b, c))


@pytest.mark.parametrize("width", range(1, 9))
def test_inverse_involution_exhaustive(width):
    for a in range(1, 1 << width, 2):
        inv = inv_odd(Word(a, width))
        assert mul(Word(a, width), inv) == Word(1, width)
        assert inv_odd(inv) == Word(a, width)


def test_strong_triangle_exhaustive_width_6():
    vals = [Word(v, 6) for v in range(64)]
    d = {(a.value, b.value): dist2(a, b) for a in vals for b in vals}
    for a, b, c in product(range(64), repeat=3):
        assert d[a, c] <= max(d[a, b], d[b, c])


@given(st.integers(1, 64).flatmap(lambda w: st.tuples(words(w), words(w))))
def test_closure_and_agreement_with_int(pair):
    a, b = pair
    m = 1 << a.width
    for r, want in [(a + b, a.value + b.value), (a - b, a.value - b.value),
                    (a * b, a.value * b.value), (a & b, a.value & b.value),
                    (a | b, a.value | b.value), (a ^ b, a.value ^ b.value),
                    (-a, -a.value), (~a, ~a.value)]:
        assert 0 <= r.value < m
        assert r.value == want % m


@given(st.integers(1, 64).flatmap(lambda w: words(w)))
def test_inverse_property(a):
    odd = Word(a.value | 1, a.width)
    assert mul(odd, inv_odd(odd)).value == 1 % (1 << a.width)


@given(st.integers(1, 64), st.integers(-10**6, 10**6), st.integers(0, 10**6).map(lambda v: 2 * v + 1))
def test_fraction_residue(width, num, den):
    w = Word.of(Fraction(num, den), width)
    assert (w.value * den - num) % (1 << width) == 0


@given(st.integers(3, 64).flatmap(lambda w: st.tuples(words(w), st.integers(0, 1 << 70))))
def test_pow_reduction(args):
    a, e = args
    a = Word(a.value | 1, a.width)
    assert pow_mod(a, e).value == pow(a.value, e, 1 << a.width)


def test_signed_reading():
    assert Word(15, 4).signed() == -1
    assert Word(7, 4).signed() == 7


# ---------------------------------------------------------------- BitSeq


def test_bitseq_basics():
    s = BitSeq.from_string("0011", coord=2)
    assert s.length == len(s) == 4
    assert list(s) == [0, 0, 1, 1]
    assert s.complement().to_string() == "1100"
    assert s.header() == "# coord=2 start=0 len=4"
    assert BitSeq([1, 0]).header() is None
    with pytest.raises(ValueError):
        s.bits[0] = 1
    with pytest.raises(ValueError):
        BitSeq([])
    with pytest.raises(ValueError):
        BitSeq([0, 2])
    with pytest.raises(ValueError):
        BitSeq.from_string("01a")


def test_bitseq_text_round_trip(tmp_path):
    seqs = [BitSeq.from_string("0110", coord=5, start=3), BitSeq.from_string("1"),
            BitSeq.from_string("10", coord=None, start=7)]
    text = dumps_bitseqs(seqs)
    assert text == "# coord=5 start=3 len=4\n0110\n1\n# coord=- start=7 len=2\n10\n"
    assert loads_bitseqs(text) == seqs
    path = tmp_path / "s.bits"
    write_bitseqs(path, seqs)
    raw = path.read_bytes()
    write_bitseqs(path, loads_bitseqs(raw.decode()))
    assert path.read_bytes() == raw
    write_bitseqs(path, seqs[:1])
    assert read_bitseq(path) == seqs[0]


def test_bitseq_header_length_checked():
    with pytest.raises(ValueError):
        loads_bitseqs("# coord=1 start=0 len=3\n01\n")


@given(st.lists(st.lists(st.integers(0, 1), min_size=1, max_size=50), min_size=1, max_size=5),
       st.lists(st.one_of(st.none(), st.integers(0, 40)), min_size=5, max_size=5))
def test_bitseq_round_trip_property(rows, coords):
    seqs = [BitSeq(r, coord=c) for r, c in zip(rows, coords)]
    assert loads_bitseqs(dumps_bitseqs(seqs)) == seqs
