import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tadic import calculus, relations as R
from tadic import generators as G
from tadic.catalog import SUITE
from tadic.expr import tfunction
from tadic.word import Word

KS = SUITE["klimov_shamir"]


# ------------------------------------------------------------ pack/unpack


def _pack_by_definition(words, k):
    m = len(words)
    return sum(((words[j % m] >> (j // m)) & 1) << j for j in range(m * k))


@pytest.mark.parametrize("m,k", [(1, 4), (2, 2), (2, 4), (4, 2), (2, 8), (4, 4), (8, 2), (16, 1)])
def test_pack_round_trip_exhaustive(m, k):
    xs = np.arange(1 << (m * k), dtype=np.uint64)
    words = G.unpack_many(xs, m, k)
    assert words.shape == (xs.size, m)
    assert np.array_equal(G.pack_many(words, k), xs)
    # The bit rule, checked against a direct definition on a sample.
    for x in range(0, 1 << (m * k), max(1, (1 << (m * k)) // 257)):
        vals = G.unpack_values(x, m, k)
        assert _pack_by_definition(vals, k) == x
        assert G.pack_values(vals, k) == x


def test_pack_m2_k2_columns():
    s = G.MultiState.of([0b01, 0b10], 2)
    x = G.pack(s)
    assert x.width == 4
    # bit0 = w0.bit0, bit1 = w1.bit0, bit2 = w0.bit1, bit3 = w1.bit1
    assert x.value == 0b1001
    assert G.unpack(x, 2, 2) == s
    assert s.column(0) == 0b01 and s.column(1) == 0b10


def test_pack_m1_is_identity():
    for v in (0, 1, 77, 255):
        assert G.pack(G.MultiState.of([v], 8)) == Word(v, 8)


@given(st.lists(st.integers(0, 255), min_size=4, max_size=4))
def test_pack_round_trip_random(values):
    s = G.MultiState.of(values, 8)
    assert G.unpack(G.pack(s), 4, 8) == s


def test_pack_errors():
    with pytest.raises(ValueError):
        G.MultiState.of([], 4)
    with pytest.raises(ValueError):
        G.MultiState((Word(1, 4), Word(1, 5)))
    with pytest.raises(ValueError):
        G.pack_values([0] * 9, 8)
    with pytest.raises(ValueError):
        G.unpack(Word(0, 8), 3, 3)


# ------------------------------------------------------------ conjugation


def test_conjugate_run_m1_is_iterate():
    f = tfunction(KS, 8)
    states = G.conjugate_run(f, G.MultiState.of([3], 8), 20)
    assert [s.values[0] for s in states] == f.orbit(3, 20).tolist()


def test_conjugate_run_counter_interleaves_bits():
    f = tfunction("x + 1", 6)
    states = G.conjugate_run(f, G.MultiState.of([0, 0], 3), 64)
    for i, s in enumerate(states):
        c = i % 64
        w0 = sum(((c >> (2 * b)) & 1) << b for b in range(3))
        w1 = sum(((c >> (2 * b + 1)) & 1) << b for b in range(3))
        assert s.values == (w0, w1)


def test_conjugate_run_klimov_shamir_period():
    f = tfunction(KS, 8)
    states = G.conjugate_run(f, G.MultiState.of([1, 0], 4), 512)
    packed = [G.pack(s).value for s in states]
    assert G.sequence_period(packed) == 256
    with pytest.raises(ValueError):
        G.conjugate_run(f, G.MultiState.of([1, 0, 0], 4), 4)


def test_conjugating_map():
    f = tfunction(KS, 8)
    g = tfunction("x + 1", 8)
    w = G.conjugating_map(f, g)
    xs = np.arange(256, dtype=np.uint64)
    assert np.array_equal(w[f.values(xs).astype(np.int64)], g.values(w.astype(np.uint64)))
    assert sorted(w.tolist()) == list(range(256))
    with pytest.raises(G.ConstructionInvalid):
        G.conjugating_map(tfunction("x + 2", 8), g)


# --------------------------------------------------------- univariate TSC


@pytest.mark.parametrize("k", [2, 3, 4])
def test_tsc_univariate_single_cycle(k):
    f = G.tsc_univariate(tfunction("x + 1", k), lambda z: int(z == 0), k)
    assert f.width == k + 2
    assert calculus.is_transitive_bruteforce(f, k + 2)
    n2 = calculus.estimate_NM(f.at_width(k + 8), 2)
    assert n2.certified and n2.K <= k


def test_tsc_univariate_example_cycle_length():
    f = G.tsc_univariate(tfunction("x + 1", 2), lambda z: int(z == 0), 2, t=3)
    assert f.width == 5 and f.cycle_length(0, 64) == 32


def test_tsc_univariate_linear_relation():
    k = 3
    f = G.tsc_univariate(tfunction("x + 1", k), lambda z: int(z == 0), k, t=12)
    assert calculus.is_transitive_bruteforce(f, 12)
    for n in range(k + 1, 12):
        p = R.extract_linear(f, 0, n, k)
        assert p.holds and (1 << k) % p.measured_period == 0


def test_tsc_univariate_rejections():
    u = tfunction("x + 1", 2)
    with pytest.raises(G.ConstructionInvalid):
        G.tsc_univariate(u, lambda z: bin(z).count("1") % 2, 2)
    with pytest.raises(G.ConstructionInvalid):
        G.tsc_univariate(u, lambda z: int(z == 0), 2, sigma=2)
    with pytest.raises(G.ConstructionInvalid):
        G.tsc_univariate(u, lambda z: int(z == 0), 2, epsilon=1)
    with pytest.raises(G.ConstructionInvalid):
        G.tsc_univariate(u, [2, 0, 0, 0], 2)


def test_skeleton_map_vectorized_matches_scalar():
    f = G.tsc_univariate(tfunction(KS, 4), [1] + [0] * 15, 4, sigma=3, epsilon=2, t=6)
    xs = np.arange(1 << 10, dtype=np.uint64)
    assert f.values(xs).tolist() == [f.apply(int(x)) for x in xs]


# ---------------------------------------------------------------- TSC step


def _all_states(m, k):
    return [G.MultiState.of(v, k) for v in itertools.product(range(1 << k), repeat=m)]


def test_tsc_step_only_column0_moves_when_alpha_is_column0():
    spec = G.default_tsc_spec(2, 3)
    spec = G.TscSpec(spec.m, spec.k, spec.sboxes, spec.sigma, spec.epsilon, alpha=lambda x: 1)
    box = spec.sboxes[0]
    for s in _all_states(2, 3)[:40]:
        t = G.tsc_step(spec, s)
        assert t.column(0) == box[s.column(0)]
        assert t.column(1) == s.column(1) and t.column(2) == s.column(2)


@pytest.mark.parametrize("m,k", [(2, 2), (2, 4), (4, 2), (4, 4)])
def test_tsc_step_is_bijection(m, k):
    spec = G.default_tsc_spec(m, k)
    images = {G.pack(G.tsc_step(spec, s)).value for s in _all_states(m, k)}
    assert len(images) == 1 << (m * k)


def test_tsc_default_column0_period():
    spec = G.default_tsc_spec()
    states = G.tsc_run(spec, G.MultiState.of([0] * 4, 8), 64)
    assert G.sequence_period([s.column(0) for s in states]) == 16
    assert spec.check_alpha()


def test_tsc_transitive_small():
    spec = G.default_tsc_spec(2, 3)
    assert calculus.is_transitive_bruteforce(G.TscMap(spec), 6)


def test_tsc_spec_validation():
    good = tuple((z + 1) % 4 for z in range(4))
    with pytest.raises(G.ConstructionInvalid):
        G.TscSpec(2, 1, ((1, 0, 3, 2),), (1,), (0,))
    with pytest.raises(G.ConstructionInvalid):
        G.TscSpec(2, 1, ((0, 0, 1, 2),), (1,), (0,))
    with pytest.raises(G.ConstructionInvalid):
        G.TscSpec(2, 1, (good,), (2,), (0,))
    with pytest.raises(G.ConstructionInvalid):
        G.TscSpec(2, 1, (good,), (1,), (1,))
    with pytest.raises(G.ConstructionInvalid):
        G.TscSpec(2, 2, (good,), (1,), (0,))
    bad_alpha = G.TscSpec(2, 2, (good, good), (1, 1), (0, 0), alpha=lambda x: x & 0b11)
    assert not bad_alpha.check_alpha()


# ------------------------------------------------------------------ wreath


def test_wreath_p1_is_iterate():
    f = tfunction(KS, 10)
    spec = G.WreathSpec(G.PeriodicControl.counter(1), {0: f})
    assert np.array_equal(G.wreath_run(spec, 5, 100), f.orbit(5, 100))


def test_wreath_counter_pair_period():
    spec = G.WreathSpec(G.PeriodicControl.counter(2),
                        {0: tfunction("x + 1", 4), 1: tfunction("x + 3", 4)})
    seq = G.wreath_run(spec, 0, 200)
    period = G.sequence_period(seq)
    # Each composition is x + 4, so each decimated stream cycles through 4 values.
    assert period == 8 and (2 * 16) % period == 0
    for r in range(2):
        sub = G.wreath_decimate(seq, 2, r)
        assert G.sequence_period(sub) == 4


def test_wreath_transitive_composition_satisfies_linear_relation():
    k = 10
    spec = G.WreathSpec(G.PeriodicControl.counter(2),
                        {0: tfunction("x + 1", k), 1: tfunction("5*x", k)})
    seq = G.wreath_run(spec, 3, 2 * (1 << k) * 2)
    assert (2 << k) % G.sequence_period(seq) == 0
    for r in range(2):
        w = G.composition_map(spec, r)
        assert calculus.is_transitive_bruteforce(w, k)
        sub = G.wreath_decimate(seq, 2, r)
        assert np.array_equal(sub[: 1 << k], w.orbit(int(sub[0]), (1 << k) - 1))
        n2 = calculus.estimate_NM(w.at_width(20), 2).K
        for n in range(n2 + 1, k - 1):
            bits = ((sub >> np.uint64(n - 1)) & np.uint64(1)).astype(np.uint8)
            top = ((sub >> np.uint64(n)) & np.uint64(1)).astype(np.uint8)
            p = R.linear_profile(bits, top, n, n2)
            assert p.holds


def test_two_transitive_maps_compose_to_non_transitive():
    spec = G.WreathSpec(G.PeriodicControl.counter(2),
                        {0: tfunction(KS, 10), 1: tfunction("3*x + 3**x", 10)})
    w = G.composition_map(spec, 0)
    assert not calculus.is_transitive_bruteforce(w, 1)


def test_wreath_missing_family_entry():
    with pytest.raises(G.ConfigError):
        G.WreathSpec(G.PeriodicControl.counter(3), {0: tfunction("x+1", 4), 1: tfunction("x+1", 4)})
    with pytest.raises(G.ConfigError):
        G.WreathSpec(G.PeriodicControl.counter(2), {0: tfunction("x+1", 4), 1: tfunction("x+1", 5)})
    with pytest.raises(ValueError):
        G.wreath_decimate([1, 2, 3], 2, 2)


def test_lfsr_control():
    ctl = G.PeriodicControl.lfsr([0, 1], seed=1, length=4)
    assert ctl.period == 15 and sum(ctl.sequence) == 8
    assert ctl(15) == ctl(0)
    with pytest.raises(ValueError):
        G.PeriodicControl.lfsr([0], seed=0, length=4)


def test_sequence_period():
    assert G.sequence_period([1, 2, 3, 1, 2, 3, 1]) == 3
    assert G.sequence_period([1, 2, 3, 4]) is None


# ------------------------------------------------------------------ config


def test_load_tsc_spec(tmp_path):
    doc = {"m": 2, "k": 2, "sboxes": [[1, 2, 3, 0], [2, 3, 1, 0]], "sigma": [1, 3], "epsilon": [0, 2]}
    path = tmp_path / "tsc.json"
    path.write_text(json.dumps(doc))
    spec = G.load_tsc_spec(path)
    assert spec.sigma == (1, 3) and spec.sboxes[1] == (2, 3, 1, 0)
    assert spec.to_json()["sigma"] == [1, 3]
    with pytest.raises(G.ConfigError):
        G.load_tsc_spec({"k": 2})
    with pytest.raises(G.ConfigError):
        G.load_tsc_spec(tmp_path / "missing.json")


def test_load_wreath_spec():
    spec = G.load_wreath_spec({"p": 2, "k": 8, "family": {"0": "x+1", "1": "5*x"}, "control": "counter"})
    assert spec.p == 2 and spec.width == 8
    lf = G.load_wreath_spec({"k": 8, "family": {"0": "x+1", "1": "5*x"},
                             "control": {"lfsr": {"taps": [0, 1], "seed": 1, "length": 4}}})
    assert lf.p == 15 and lf.control.kind == "lfsr"
    lst = G.load_wreath_spec({"family": {"0": "x+1", "1": "x+3"}, "control": [0, 0, 1]}, width=6)
    assert lst.p == 3 and lst.width == 6
    with pytest.raises(G.ConfigError):
        G.load_wreath_spec({"k": 8, "family": {"0": "x+1"}, "control": "bogus"})
    with pytest.raises(G.ConfigError):
        G.load_wreath_spec({"p": 3, "k": 8, "family": {"0": "x+1", "1": "x+3"}, "control": [0, 1]})
    with pytest.raises(G.ConfigError):
        G.load_wreath_spec({"k": 8})
