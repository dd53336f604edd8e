"""Coordinate sequences and the relations between adjacent ones.

Notation: ``chi[n][i]`` is bit ``n`` of the ``i``-th iterate ``f^i(x0)``.
For a transitive map that is uniformly differentiable modulo 4 with radius
``N2``, every level ``n > N2`` satisfies

    chi[n][i + 2**(n-1)] = chi[n-1][i] + chi[n][i] + c(n) + y(i)   (mod 2)

with ``c(n) = chi[n-1][0] + chi[n][0] + chi[n][2**(n-1)]`` and a correction
sequence ``y`` whose period divides ``2**N2`` and which does not depend on
``n``.  The sequence-level helpers here work on bits alone, so
:func:`recover` never touches the map that produced them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .expr import TMap, iterate_stream
from .word import BitSeq


class RelationVerdict(str, enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"
    UNJUDGED = "Unjudged"


class TheoremOutOfRange(ValueError):
    """The requested level is below the range where the relation is claimed."""


class SequenceTooShort(ValueError):
    pass


class RelationViolated(ArithmeticError):
    def __init__(self, level: int, i: int, why: str = ""):
        super().__init__(f"relation fails at level {level}, i={i}" + (f": {why}" if why else ""))
        self.level = level
        self.i = i


@dataclass(frozen=True)
class HalfPeriodResult:
    verdict: RelationVerdict
    witness: int | None = None

    @property
    def holds(self) -> bool:
        return self.verdict is RelationVerdict.HOLDS


@dataclass(frozen=True)
class RelationProfile:
    """Outcome of fitting one relation at one level.

    ``y`` is the correction sequence over the examined window and
    ``measured_period`` its minimal period (a power of two dividing the
    window).  ``theta`` is the fitted constant for the quadratic relation;
    in the per-iterate mode it is ``None`` and ``theta_seq`` carries the
    fitted values instead.
    """

    kind: str
    n: int
    constant: int
    y: BitSeq
    measured_period: int
    bound: int
    verdict: RelationVerdict
    witness: int | None = None
    theta: int | None = None
    theta_seq: BitSeq | None = None
    ambiguous_theta: bool = False
    note: str | None = None
    alternatives: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict is RelationVerdict.HOLDS

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "constant": self.constant,
               "y": self.y.to_string(), "measured_period": self.measured_period,
               "period_bound": self.bound, "verdict": self.verdict.value,
               "witness": self.witness}
        if self.kind == "Quadratic":
            out["theta"] = self.theta
            out["ambiguous_theta"] = self.ambiguous_theta
            if self.theta_seq is not None:
                out["theta_seq"] = self.theta_seq.to_string()
            if self.alternatives:
                out["theta_periods"] = {str(k): v for k, v in self.alternatives.items()}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class NIndependence:
    verdict: RelationVerdict
    profiles: tuple[RelationProfile, ...]
    witness: tuple[int, int] | None = None  # (level, i)

    @property
    def holds(self) -> bool:
        return self.verdict is RelationVerdict.HOLDS


@dataclass(frozen=True)
class RecoveryResult:
    levels: dict[int, tuple[BitSeq, BitSeq]]
    floor: int
    y_used: BitSeq
    top: int

    def candidates(self, m: int) -> tuple[BitSeq, BitSeq]:
        return self.levels[m]

    def contains(self, m: int, truth) -> bool:
        """Whether either candidate at level ``m`` equals ``truth`` on its full period."""
        t = np.asarray(truth.bits if isinstance(truth, BitSeq) else truth, dtype=np.uint8)
        c0, c1 = self.levels[m]
        t = t[: c0.length]
        return bool(np.array_equal(c0.bits, t) or np.array_equal(c1.bits, t))

    def to_json(self) -> dict:
        return {"top": self.top, "floor": self.floor, "y_used": self.y_used.to_string(),
                "levels": {str(m): [a.to_string(), b.to_string()]
                           for m, (a, b) in sorted(self.levels.items(), reverse=True)}}


# --------------------------------------------------------------- sequences


def coordinate_sequences(f: TMap, x0: int, levels, length: int) -> dict[int, BitSeq]:
    """Several coordinate sequences from one streamed orbit of ``length`` iterates."""
    levels = sorted(set(int(n) for n in levels))
    if length < 1:
        raise ValueError("length must be positive")
    for n in levels:
        if not 0 <= n < f.width:
            raise ValueError(f"level {n} outside [0, {f.width})")
    out = {n: np.empty(length, dtype=np.uint8) for n in levels}
    pos = 0
    for block in iterate_stream(f, int(x0), length - 1):
        for n in levels:
            out[n][pos:pos + block.size] = (block >> np.uint64(n)) & np.uint64(1)
        pos += block.size
    return {n: BitSeq(bits, coord=n) for n, bits in out.items()}


def coordinate_sequence(f: TMap, x0: int, n: int, length: int) -> BitSeq:
    """Bits ``n`` of ``x0, f(x0), ..., f^(length-1)(x0)``."""
    return coordinate_sequences(f, x0, [n], length)[n]


def _bits(s) -> np.ndarray:
    return np.asarray(s.bits if isinstance(s, BitSeq) else s, dtype=np.uint8)


def check_half_period(s, n: int) -> HalfPeriodResult:
    """Second half of each ``2**(n+1)`` period is the complement of the first."""
    b = _bits(s)
    half = 1 << n
    if b.size < half + 1:
        raise SequenceTooShort(f"need at least {half + 1} bits, have {b.size}")
    bad = np.flatnonzero(b[half:] == b[:-half])
    if bad.size:
        return HalfPeriodResult(RelationVerdict.VIOLATED, int(bad[0]))
    return HalfPeriodResult(RelationVerdict.HOLDS)


def minimal_period(s) -> int:
    """Smallest power of two ``p`` with ``s[i + p] == s[i]`` across the window.

    Returns the window length when no shorter power of two fits.
    """
    b = _bits(s)
    p = 1
    while p < b.size:
        if np.array_equal(b[p:], b[:-p]):
            return p
        p <<= 1
    return int(b.size)


def extend_half_period(s, n: int) -> np.ndarray:
    """Full period ``2**(n+1)`` of a level-``n`` sequence from its first half."""
    b = _bits(s)
    half = 1 << n
    if b.size < half:
        raise SequenceTooShort(f"level {n} needs {half} bits, have {b.size}")
    first = b[:half]
    return np.concatenate([first, first ^ 1])


# ---------------------------------------------------------- linear relation


def linear_constant(chi_prev, chi_n, n: int) -> int:
    a, b = _bits(chi_prev), _bits(chi_n)
    return int(a[0] ^ b[0] ^ b[1 << (n - 1)])


def linear_y(chi_prev, chi_n, n: int) -> np.ndarray:
    """Solve the linear relation for ``y(i)``, ``0 <= i < 2**(n-1)``."""
    a, b = _bits(chi_prev), _bits(chi_n)
    q = 1 << (n - 1)
    if a.size < q or b.size < 2 * q:
        raise SequenceTooShort(f"level {n} needs {q} and {2 * q} bits")
    c = a[0] ^ b[0] ^ b[q]
    return b[q:2 * q] ^ a[:q] ^ b[:q] ^ c


def _period_verdict(y: np.ndarray, bound_bits: int) -> tuple[int, RelationVerdict, int | None]:
    period = minimal_period(y)
    bound = 1 << bound_bits
    if y.size < bound:
        return period, RelationVerdict.INCONCLUSIVE, None
    if bound % period == 0 and period <= bound:
        return period, RelationVerdict.HOLDS, None
    bad = np.flatnonzero(y[bound:] != y[:-bound])
    return period, RelationVerdict.VIOLATED, int(bad[0]) if bad.size else None


def linear_profile(chi_prev, chi_n, n: int, N2: int) -> RelationProfile:
    """Fit the linear relation on given sequences; no map evaluation."""
    if n < N2 + 1:
        raise TheoremOutOfRange(f"linear relation needs n >= N2 + 1 = {N2 + 1}, got {n}")
    y = linear_y(chi_prev, chi_n, n)
    period, verdict, wit = _period_verdict(y, N2)
    return RelationProfile("Linear", n, linear_constant(chi_prev, chi_n, n),
                           BitSeq(y), period, 1 << N2, verdict, wit)


def extract_linear(f: TMap, x0: int, n: int, N2: int) -> RelationProfile:
    if n < N2 + 1:
        raise TheoremOutOfRange(f"linear relation needs n >= N2 + 1 = {N2 + 1}, got {n}")
    if f.width <= n:
        raise ValueError(f"level {n} needs width > {n}")
    seqs = coordinate_sequences(f, x0, [n - 1, n], 1 << n)
    return linear_profile(seqs[n - 1], seqs[n], n, N2)


def check_n_independence(f: TMap, x0: int, n_lo: int, n_hi: int, N2: int) -> NIndependence:
    """Extract ``y`` at every level in ``[n_lo, n_hi]`` and compare on the common range."""
    if not N2 + 1 <= n_lo < n_hi < f.width:
        raise TheoremOutOfRange(f"need N2 + 1 <= n_lo < n_hi < width, got {n_lo}, {n_hi}")
    seqs = coordinate_sequences(f, x0, range(n_lo - 1, n_hi + 1), 1 << n_hi)
    profiles = tuple(linear_profile(seqs[n - 1], seqs[n], n, N2) for n in range(n_lo, n_hi + 1))
    common = profiles[0].y.length
    ref = profiles[0].y.bits[:common]
    for p in profiles[1:]:
        bad = np.flatnonzero(p.y.bits[:common] != ref)
        if bad.size:
            return NIndependence(RelationVerdict.VIOLATED, profiles, (p.n, int(bad[0])))
    return NIndependence(RelationVerdict.HOLDS, profiles)


# ------------------------------------------------------- quadratic relation


def quadratic_y(chi_m2, chi_m1, chi_n, n: int, theta) -> np.ndarray:
    """``y_i`` implied by the quadratic relation for a given ``theta``.

    ``theta`` is a bit or an array of per-iterate bits; ``0 <= i < 2**(n-1)``.
    """
    a, b, c = _bits(chi_m2), _bits(chi_m1), _bits(chi_n)
    q, L = 1 << (n - 2), 1 << (n - 1)
    if min(a.size, b.size) < L or c.size < L + q:
        raise SequenceTooShort(f"level {n} needs {L + q} bits")
    a, b = a[:L], b[:L]
    t = np.asarray(theta, dtype=np.uint8)
    if t.ndim:
        t = t[:L]
    return c[q:q + L] ^ (a & b) ^ (t & (a ^ b)) ^ c[:L]


def quadratic_theta_seq(chi_m2, chi_m1, n: int) -> np.ndarray:
    """Per-iterate ``theta_i`` read from level ``n-1``: ``chi[n-1][i+2**(n-2)] + a + b``."""
    a, b = _bits(chi_m2), _bits(chi_m1)
    q, L = 1 << (n - 2), 1 << (n - 1)
    return b[q:q + L] ^ a[:L] ^ b[:L]


def quadratic_profile(chi_m2, chi_m1, chi_n, n: int, N3: int,
                      theta_mode: str = "constant") -> RelationProfile:
    """Fit the quadratic relation on given sequences.

    ``theta_mode="constant"`` tries ``theta`` in {0, 1} and keeps those whose
    ``y`` has period dividing ``2**N3``; ``"per-iterate"`` uses the
    ``theta_i`` forced by level ``n-1`` instead.
    """
    if n < N3 + 2:
        raise TheoremOutOfRange(f"quadratic relation needs n >= N3 + 2 = {N3 + 2}, got {n}")
    a, b = _bits(chi_m2), _bits(chi_m1)
    beta = int(a[0] ^ b[0] ^ b[1 << (n - 2)])
    judged = N3 > 1
    if theta_mode == "per-iterate":
        tseq = quadratic_theta_seq(chi_m2, chi_m1, n)
        y = quadratic_y(chi_m2, chi_m1, chi_n, n, tseq)
        period, verdict, wit = _period_verdict(y, N3)
        if not judged:
            verdict, wit = RelationVerdict.UNJUDGED, None
        return RelationProfile("Quadratic", n, beta, BitSeq(y), period, 1 << N3, verdict, wit,
                               theta=None, theta_seq=BitSeq(tseq))
    if theta_mode != "constant":
        raise ValueError(f"unknown theta mode {theta_mode!r}")
    fits = {}
    for theta in (0, 1):
        y = quadratic_y(chi_m2, chi_m1, chi_n, n, theta)
        fits[theta] = (y, *_period_verdict(y, N3))
    periods = {t: v[1] for t, v in fits.items()}
    good = [t for t in (0, 1) if fits[t][2] is RelationVerdict.HOLDS]
    best = min((0, 1), key=lambda t: (periods[t], t))
    if not judged:
        y, period = fits[best][0], fits[best][1]
        return RelationProfile("Quadratic", n, beta, BitSeq(y), period, 1 << N3,
                               RelationVerdict.UNJUDGED, None, theta=best,
                               note="N3 <= 1: period claim not applicable",
                               alternatives=periods)
    if good:
        t = good[0] if len(good) == 1 else best
        y, period = fits[t][0], fits[t][1]
        return RelationProfile("Quadratic", n, beta, BitSeq(y), period, 1 << N3,
                               RelationVerdict.HOLDS, None, theta=t,
                               ambiguous_theta=len(good) == 2,
                               note="AmbiguousTheta" if len(good) == 2 else None,
                               alternatives=periods)
    y, period, verdict, wit = fits[best]
    if verdict is RelationVerdict.INCONCLUSIVE:
        return RelationProfile("Quadratic", n, beta, BitSeq(y), period, 1 << N3, verdict,
                               None, theta=best, alternatives=periods)
    return RelationProfile("Quadratic", n, beta, BitSeq(y), period, 1 << N3,
                           RelationVerdict.VIOLATED, wit, theta=best,
                           note="NoConstantTheta", alternatives=periods)


def extract_quadratic(f: TMap, x0: int, n: int, N3: int,
                      theta_mode: str = "constant") -> RelationProfile:
    if n < N3 + 2:
        raise TheoremOutOfRange(f"quadratic relation needs n >= N3 + 2 = {N3 + 2}, got {n}")
    if f.width <= n:
        raise ValueError(f"level {n} needs width > {n}")
    seqs = coordinate_sequences(f, x0, [n - 2, n - 1, n], 1 << n)
    return quadratic_profile(seqs[n - 2], seqs[n - 1], seqs[n], n, N3, theta_mode)


# ----------------------------------------------------------------- recovery


def recover(chi_hi, chi_lo, N2: int, n: int | None = None) -> RecoveryResult:
    """Reconstruct every lower coordinate sequence down to level ``N2``.

    ``chi_hi`` is level ``n`` over ``i < 2**n`` and ``chi_lo`` level ``n-1``
    over at least ``i < 2**(n-1)``.  At each level two complementary full
    periods are returned; the one starting with 0 is carried downward.
    """
    if n is None:
        n = getattr(chi_hi, "coord", None)
        if n is None:
            raise ValueError("level n not given and chi_hi carries no coordinate")
    if n - 1 < N2 + 1:
        raise TheoremOutOfRange(f"need n - 1 >= N2 + 1, got n={n}, N2={N2}")
    hi, lo = _bits(chi_hi), _bits(chi_lo)
    if hi.size < 1 << n:
        raise SequenceTooShort(f"level {n} sequence needs {1 << n} bits, has {hi.size}")
    if lo.size < 1 << (n - 1):
        raise SequenceTooShort(f"level {n - 1} sequence needs {1 << (n - 1)} bits")
    upper = extend_half_period(lo, n - 1)
    given = min(lo.size, upper.size)
    bad = np.flatnonzero(lo[:given] != upper[:given])
    if bad.size:
        raise RelationViolated(n - 1, int(bad[0]), "input breaks the half-period property")
    y = linear_y(upper, hi, n)
    bound = 1 << N2
    bad = np.flatnonzero(y[bound:] != y[:-bound])
    if bad.size:
        raise RelationViolated(n, int(bad[0]), f"y is not {bound}-periodic")
    levels: dict[int, tuple[BitSeq, BitSeq]] = {}
    for m in range(n - 2, N2 - 1, -1):
        half = 1 << m
        # chi[m][i] = chi[m+1][i+2**m] + chi[m+1][i] + chi[m+1][0] + chi[m+1][2**m] + chi[m][0] + y(i)
        base = upper[half:2 * half] ^ upper[:half] ^ upper[0] ^ upper[half] ^ y[:half]
        base[0] = 0
        cand0 = np.concatenate([base, base ^ 1])
        cand1 = cand0 ^ 1
        levels[m] = (BitSeq(cand0, coord=m), BitSeq(cand1, coord=m))
        upper = cand0
    return RecoveryResult(levels, N2, BitSeq(y), n)
