"""Generators built from T-functions: multivariate states, column-wise
S-box maps, and counter-dependent (wreath product) recursions.

A state of ``m`` words of ``k`` bits is packed into one ``m*k``-bit word by
reading the bit matrix column by column: bit ``j`` of the packed word is bit
``j // m`` of word ``j % m``.  Column ``c`` of the state (bit ``c`` of every
word, word 0 lowest) is then the ``m``-bit field at offset ``c*m``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import TMap, tfunction
from .word import MAX_WIDTH, Word, mask


class ConstructionInvalid(ValueError):
    """Parameters violate the hypotheses of a construction."""


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ multi-word state


@dataclass(frozen=True)
class MultiState:
    words: tuple[Word, ...]

    def __post_init__(self) -> None:
        words = tuple(self.words)
        if not words:
            raise ValueError("a state holds at least one word")
        if len({w.width for w in words}) != 1:
            raise ValueError("all words of a state share one width")
        object.__setattr__(self, "words", words)

    @classmethod
    def of(cls, values: Sequence[int], k: int) -> "MultiState":
        return cls(tuple(Word(v, k) for v in values))

    @property
    def m(self) -> int:
        return len(self.words)

    @property
    def k(self) -> int:
        return self.words[0].width

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(w.value for w in self.words)

    def column(self, j: int) -> int:
        return sum(((w.value >> j) & 1) << r for r, w in enumerate(self.words))


def _check_shape(m: int, k: int) -> None:
    if m < 1 or k < 1:
        raise ValueError("m and k must be positive")
    if m * k > MAX_WIDTH:
        raise ValueError(f"m*k = {m * k} exceeds {MAX_WIDTH} bits")


def pack_values(values: Sequence[int], k: int) -> int:
    m = len(values)
    _check_shape(m, k)
    out = 0
    for r, v in enumerate(values):
        for j in range(k):
            out |= ((int(v) >> j) & 1) << (j * m + r)
    return out


def unpack_values(x: int, m: int, k: int) -> tuple[int, ...]:
    _check_shape(m, k)
    words = [0] * m
    for j in range(m * k):
        words[j % m] |= ((int(x) >> j) & 1) << (j // m)
    return tuple(words)


def pack(state: MultiState) -> Word:
    return Word(pack_values(state.values, state.k), state.m * state.k)


def unpack(x: Word, m: int, k: int) -> MultiState:
    if x.width != m * k:
        raise ValueError(f"packed width {x.width} != m*k = {m * k}")
    return MultiState.of(unpack_values(x.value, m, k), k)


def pack_many(words: np.ndarray, k: int) -> np.ndarray:
    """Pack rows of an ``(N, m)`` uint64 array."""
    words = np.asarray(words, dtype=np.uint64)
    m = words.shape[1]
    _check_shape(m, k)
    out = np.zeros(words.shape[0], dtype=np.uint64)
    for r in range(m):
        for j in range(k):
            out |= ((words[:, r] >> np.uint64(j)) & np.uint64(1)) << np.uint64(j * m + r)
    return out


def unpack_many(xs: np.ndarray, m: int, k: int) -> np.ndarray:
    """Inverse of :func:`pack_many`; returns an ``(N, m)`` array."""
    _check_shape(m, k)
    xs = np.asarray(xs, dtype=np.uint64)
    out = np.zeros((xs.size, m), dtype=np.uint64)
    for j in range(m * k):
        out[:, j % m] |= ((xs >> np.uint64(j)) & np.uint64(1)) << np.uint64(j // m)
    return out


def conjugate_run(f_uni: TMap, s0: MultiState, steps: int) -> list[MultiState]:
    """States ``unpack(f^i(pack(s0)))`` for ``i = 0..steps``."""
    m, k = s0.m, s0.k
    if f_uni.width != m * k:
        raise ValueError(f"map width {f_uni.width} != m*k = {m * k}")
    orbit = f_uni.orbit(pack(s0).value, steps)
    return [MultiState.of(row, k) for row in unpack_many(orbit, m, k).tolist()]


def conjugating_map(f: TMap, g: TMap, x0: int = 0, y0: int = 0) -> np.ndarray:
    """Table ``w`` with ``w(f(x)) = g(w(x))`` for permutations on ``n <= 16`` bits.

    Cycles of equal length are matched in order of their smallest element;
    inside each pair of cycles the alignment starts at ``x0``/``y0`` when they
    lie on the first cycle.  Raises ConstructionInvalid when the cycle types
    differ.
    """
    n = f.width
    if g.width != n or n > 16:
        raise ValueError("both maps must share a width of at most 16 bits")
    size = 1 << n
    fv = f.values(np.arange(size, dtype=np.uint64)).astype(np.int64)
    gv = g.values(np.arange(size, dtype=np.uint64)).astype(np.int64)

    def cycles(table: np.ndarray, first: int) -> list[list[int]]:
        seen = np.zeros(size, dtype=bool)
        out = []
        for start in [first] + list(range(size)):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            x = int(table[start])
            while x != start:
                if seen[x]:
                    raise ConstructionInvalid("map is not a permutation")
                cyc.append(x)
                seen[x] = True
                x = int(table[x])
            out.append(cyc)
        return out

    cf, cg = cycles(fv, x0), cycles(gv, y0)
    if sorted(map(len, cf)) != sorted(map(len, cg)):
        raise ConstructionInvalid("cycle types differ; no conjugating map exists")
    pool: dict[int, list[list[int]]] = {}
    for c in cg:
        pool.setdefault(len(c), []).append(c)
    w = np.empty(size, dtype=np.uint64)
    for c in cf:
        d = pool[len(c)].pop(0)
        w[np.asarray(c)] = np.asarray(d, dtype=np.uint64)
    return w


# ------------------------------------------------------------- TableMap


class TableMap(TMap):
    """A map on ``width``-bit words given by a full lookup table."""

    def __init__(self, table: np.ndarray, name: str = "f"):
        table = np.asarray(table, dtype=np.uint64)
        self.width = int(table.size).bit_length() - 1
        if 1 << self.width != table.size:
            raise ValueError("table size must be a power of two")
        self.table = table
        self.name = name

    def apply(self, x: int) -> int:
        return int(self.table[int(x)])

    def values(self, xs) -> np.ndarray:
        return self.table[np.asarray(xs, dtype=np.uint64).astype(np.int64)]

    def orbit(self, x0: int, steps: int) -> np.ndarray:
        out = np.empty(steps + 1, dtype=np.uint64)
        x = int(x0) & mask(self.width)
        t = self.table
        for i in range(steps + 1):
            out[i] = x
            x = int(t[x])
        return out


# ------------------------------------------------------ univariate skeleton


class SkeletonMap(TMap):
    """``u(lo) + 2**k * (hi + (sigma - eps) * v(lo) + eps)`` for ``x = lo + 2**k * hi``."""

    def __init__(self, u_table: np.ndarray, v_table: np.ndarray, k: int,
                 sigma: int, epsilon: int, width: int):
        self.u_table, self.v_table = u_table, v_table
        self.k, self.sigma, self.epsilon = k, sigma, epsilon
        self.width = width
        self.name = f"skeleton(k={k}, sigma={sigma}, eps={epsilon})"
        self._m = mask(width)

    def apply(self, x: int) -> int:
        lo, hi = x & mask(self.k), x >> self.k
        v = int(self.v_table[lo])
        return (int(self.u_table[lo]) + ((hi + (self.sigma - self.epsilon) * v
                                          + self.epsilon) << self.k)) & self._m

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        lo = (xs & np.uint64(mask(self.k))).astype(np.int64)
        hi = xs >> np.uint64(self.k)
        v = self.v_table[lo]
        step = np.uint64((self.sigma - self.epsilon) & self._m)
        with np.errstate(over="ignore"):
            upper = (hi + step * v + np.uint64(self.epsilon & self._m)) << np.uint64(self.k)
            return (self.u_table[lo] + upper) & np.uint64(self._m)

    def at_width(self, width: int) -> "SkeletonMap":
        if width < self.k:
            return super().at_width(width)
        return SkeletonMap(self.u_table, self.v_table, self.k, self.sigma, self.epsilon, width)


def tsc_univariate(u: TMap | Callable[[int], int], v: Callable[[int], int] | Sequence[int],
                   k: int, sigma: int = 1, epsilon: int = 0, t: int = 2) -> SkeletonMap:
    """Transitive map on ``k + t`` bits from a transitive ``u`` on ``k`` bits.

    ``v`` maps ``k``-bit words to {0, 1} and must equal 1 on an odd number of
    them; ``sigma`` must be odd and ``epsilon`` even.
    """
    if t < 1:
        raise ValueError("t must be positive")
    if sigma % 2 == 0:
        raise ConstructionInvalid(f"sigma={sigma} must be odd")
    if epsilon % 2:
        raise ConstructionInvalid(f"epsilon={epsilon} must be even")
    size = 1 << k
    xs = np.arange(size, dtype=np.uint64)
    if isinstance(u, TMap):
        u_table = u.at_width(k).values(xs) if u.width != k else u.values(xs)
    else:
        u_table = np.array([int(u(int(z))) & mask(k) for z in range(size)], dtype=np.uint64)
    if callable(v):
        v_table = np.array([int(v(z)) for z in range(size)], dtype=np.uint64)
    else:
        v_table = np.asarray(v, dtype=np.uint64)
    if v_table.size != size or np.any(v_table > 1):
        raise ConstructionInvalid("v must map every k-bit word to 0 or 1")
    if int(v_table.sum()) % 2 == 0:
        raise ConstructionInvalid(f"v equals 1 on {int(v_table.sum())} words; the count must be odd")
    return SkeletonMap(u_table.astype(np.uint64), v_table, k, sigma, epsilon, k + t)


# --------------------------------------------------------------- TSC-style


def _single_cycle(perm: np.ndarray) -> bool:
    x, steps = int(perm[0]), 1
    while x != 0 and steps <= perm.size:
        x = int(perm[x])
        steps += 1
    return x == 0 and steps == perm.size


def _perm_power(perm: np.ndarray, e: int) -> np.ndarray:
    out = np.arange(perm.size, dtype=np.int64)
    base = perm.astype(np.int64)
    while e:
        if e & 1:
            out = base[out]
        base = base[base]
        e >>= 1
    return out


def default_alpha(m: int, k: int) -> Callable[[int], int]:
    """Odd parameter: column ``j`` is selected when columns ``0..j-1`` are all ones."""
    def alpha(packed: int) -> int:
        out = 1
        for j in range(1, k):
            low = mask(j * m)
            if packed & low == low:
                out |= 1 << j
            else:
                break
        return out
    return alpha


@dataclass(frozen=True)
class TscSpec:
    m: int
    k: int
    sboxes: tuple[tuple[int, ...], ...]
    sigma: tuple[int, ...]
    epsilon: tuple[int, ...]
    alpha: Callable[[int], int] | None = None

    def __post_init__(self) -> None:
        _check_shape(self.m, self.k)
        size = 1 << self.m
        if not len(self.sboxes) == len(self.sigma) == len(self.epsilon) == self.k:
            raise ConstructionInvalid("need one S-box, sigma and epsilon per column")
        for j, s in enumerate(self.sboxes):
            arr = np.asarray(s, dtype=np.int64)
            if arr.size != size or sorted(arr.tolist()) != list(range(size)):
                raise ConstructionInvalid(f"S-box {j} is not a permutation of {size} elements")
            if not _single_cycle(arr):
                raise ConstructionInvalid(f"S-box {j} is not a single {size}-cycle")
        if any(s % 2 == 0 for s in self.sigma):
            raise ConstructionInvalid("sigma entries must be odd")
        if any(e % 2 for e in self.epsilon):
            raise ConstructionInvalid("epsilon entries must be even")
        if self.alpha is None:
            object.__setattr__(self, "alpha", default_alpha(self.m, self.k))

    @property
    def width(self) -> int:
        return self.m * self.k

    def power_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """``(S_j**sigma_j, S_j**eps_j)`` stacked as ``(k, 2**m)`` arrays."""
        cycle = 1 << self.m
        on = np.stack([_perm_power(np.asarray(s), e % cycle)
                       for s, e in zip(self.sboxes, self.sigma)])
        off = np.stack([_perm_power(np.asarray(s), e % cycle)
                        for s, e in zip(self.sboxes, self.epsilon)])
        return on, off

    def check_alpha(self, samples: int = 512, seed: int = 0) -> bool:
        """Sampled check: column 0 always selected, column j blind to column j."""
        rng = np.random.default_rng(seed)
        w = self.width
        for x in rng.integers(0, 1 << min(w, 63), size=samples).tolist():
            x &= mask(w)
            a = self.alpha(x)
            if not a & 1:
                return False
            for j in range(1, self.k):
                y = x ^ (int(rng.integers(1, 1 << self.m)) << (j * self.m))
                if (self.alpha(y) >> j) & 1 != (a >> j) & 1:
                    return False
        return True

    def to_json(self) -> dict:
        return {"m": self.m, "k": self.k, "sboxes": [list(s) for s in self.sboxes],
                "sigma": list(self.sigma), "epsilon": list(self.epsilon)}


class TscMap(TMap):
    """The column-wise S-box step acting on packed states."""

    def __init__(self, spec: TscSpec):
        self.spec = spec
        self.width = spec.width
        self.name = f"tsc(m={spec.m}, k={spec.k})"
        self._on, self._off = spec.power_tables()

    def apply(self, x: int) -> int:
        s = self.spec
        a = s.alpha(x)
        cm = mask(s.m)
        out = 0
        for j in range(s.k):
            col = (x >> (j * s.m)) & cm
            table = self._on if (a >> j) & 1 else self._off
            out |= int(table[j, col]) << (j * s.m)
        return out


def tsc_step(spec: TscSpec, state: MultiState) -> MultiState:
    if state.m != spec.m or state.k != spec.k:
        raise ValueError("state shape does not match the TscSpec")
    x = pack(state).value
    return MultiState.of(unpack_values(TscMap(spec).apply(x), spec.m, spec.k), spec.k)


def tsc_run(spec: TscSpec, state: MultiState, steps: int) -> list[MultiState]:
    return conjugate_run(TscMap(spec), state, steps)


def default_tsc_spec(m: int = 4, k: int = 8) -> TscSpec:
    """Every column uses the cycle ``z -> z + 1 mod 2**m``; sigma 1, epsilon 0."""
    box = tuple((z + 1) % (1 << m) for z in range(1 << m))
    return TscSpec(m, k, (box,) * k, (1,) * k, (0,) * k)


# ------------------------------------------------------------------ wreath


@dataclass(frozen=True)
class PeriodicControl:
    """A control stream given by one full period of its values."""

    sequence: tuple[int, ...]
    kind: str = "custom"

    @classmethod
    def counter(cls, p: int) -> "PeriodicControl":
        if p < 1:
            raise ValueError("period must be positive")
        return cls(tuple(range(p)), "counter")

    @classmethod
    def lfsr(cls, taps: Sequence[int], seed: int, length: int) -> "PeriodicControl":
        """Output bits of a Fibonacci LFSR, one full state cycle.

        ``taps`` are the state bits XORed into the feedback; the period is
        whatever the register produces (maximal only for primitive taps).
        """
        if not 1 <= length <= 24 or seed & mask(length) == 0:
            raise ValueError("need 1 <= length <= 24 and a nonzero seed")
        start = state = seed & mask(length)
        bits = []
        while True:
            bits.append(state & 1)
            fb = 0
            for t in taps:
                fb ^= (state >> t) & 1
            state = (state >> 1) | (fb << (length - 1))
            if state == start:
                break
            if len(bits) > 1 << length:
                raise ValueError("LFSR does not return to its seed")
        return cls(tuple(bits), "lfsr")

    @property
    def period(self) -> int:
        return len(self.sequence)

    def __call__(self, i: int) -> int:
        return self.sequence[i % self.period]


@dataclass(frozen=True)
class WreathSpec:
    control: PeriodicControl
    family: Mapping[int, TMap]

    def __post_init__(self) -> None:
        missing = set(self.control.sequence) - set(self.family)
        if missing:
            raise ConfigError(f"no map for control values {sorted(missing)}")
        widths = {f.width for f in self.family.values()}
        if len(widths) != 1:
            raise ConfigError("all family maps must share one width")

    @property
    def p(self) -> int:
        return self.control.period

    @property
    def width(self) -> int:
        return next(iter(self.family.values())).width


class ComposedMap(TMap):
    """``maps[-1] o ... o maps[0]``."""

    def __init__(self, maps: Sequence[TMap], name: str = "w"):
        self.maps = tuple(maps)
        self.width = self.maps[0].width
        self.name = name

    def apply(self, x: int) -> int:
        for f in self.maps:
            x = f.apply(x)
        return x

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        for f in self.maps:
            xs = f.values(xs)
        return xs

    def at_width(self, width: int) -> "ComposedMap":
        return ComposedMap([f.at_width(width) for f in self.maps], self.name)


def wreath_run(spec: WreathSpec, x0: int, steps: int) -> np.ndarray:
    """``x_0 .. x_steps`` with ``x_{i+1} = f_{y_i}(x_i)``."""
    out = np.empty(steps + 1, dtype=np.uint64)
    x = int(x0) & mask(spec.width)
    out[0] = x
    for i in range(steps):
        x = spec.family[spec.control(i)].apply(x)
        out[i + 1] = x
    return out


def wreath_decimate(seq, p: int, r: int) -> np.ndarray:
    if not 0 <= r < p:
        raise ValueError("need 0 <= r < p")
    return np.asarray(seq)[r::p]


def composition_map(spec: WreathSpec, r: int) -> ComposedMap:
    """Map carrying ``x_{r + l p}`` to ``x_{r + (l+1) p}``."""
    p = spec.p
    maps = [spec.family[spec.control(r + j)] for j in range(p)]
    return ComposedMap(maps, f"w_{r}")


def sequence_period(seq) -> int | None:
    """Smallest ``P`` with ``seq[i + P] == seq[i]`` over the window, seen at least twice."""
    s = np.asarray(seq)
    for P in np.flatnonzero(s[1:] == s[0]) + 1:
        P = int(P)
        if 2 * P > s.size:
            break
        if np.array_equal(s[P:], s[:-P]):
            return P
    return None


# ------------------------------------------------------------- JSON config


def load_config(source) -> dict:
    if isinstance(source, Mapping):
        return dict(source)
    try:
        return json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {source}: {exc}") from None


def load_tsc_spec(source) -> TscSpec:
    cfg = load_config(source)
    try:
        m, k = int(cfg["m"]), int(cfg["k"])
        cycle = tuple((z + 1) % (1 << m) for z in range(1 << m))
        sboxes = tuple(tuple(int(v) for v in s) for s in cfg.get("sboxes", [cycle] * k))
        sigma = tuple(int(v) for v in cfg.get("sigma", [1] * k))
        epsilon = tuple(int(v) for v in cfg.get("epsilon", [0] * k))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad TSC config: {exc}") from None
    return TscSpec(m, k, sboxes, sigma, epsilon)


def load_wreath_spec(source, width: int | None = None) -> WreathSpec:
    cfg = load_config(source)
    try:
        k = int(width if width is not None else cfg["k"])
        family = {int(key): tfunction(text, k) for key, text in cfg["family"].items()}
        control = cfg.get("control", "counter")
        if control == "counter":
            ctl = PeriodicControl.counter(int(cfg.get("p", len(family))))
        elif isinstance(control, Mapping) and "lfsr" in control:
            spec = control["lfsr"]
            ctl = PeriodicControl.lfsr(spec["taps"], int(spec["seed"]), int(spec["length"]))
        elif isinstance(control, list):
            ctl = PeriodicControl(tuple(int(v) for v in control))
        else:
            raise ConfigError(f"unknown control {control!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad wreath config: {exc}") from None
    if "p" in cfg and ctl.period != int(cfg["p"]):
        raise ConfigError(f"control period {ctl.period} != p = {cfg['p']}")
    return WreathSpec(ctl, family)


__all__ = [
    "ComposedMap", "ConfigError", "ConstructionInvalid", "MultiState", "PeriodicControl",
    "SkeletonMap", "TableMap", "TscMap", "TscSpec", "WreathSpec",
    "composition_map", "conjugate_run", "conjugating_map", "default_alpha",
    "default_tsc_spec", "load_config", "load_tsc_spec", "load_wreath_spec", "pack", "pack_many",
    "pack_values", "sequence_period", "tsc_run", "tsc_step", "tsc_univariate", "unpack",
    "unpack_many", "unpack_values", "wreath_decimate", "wreath_run",
]
