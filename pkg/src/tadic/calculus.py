"""Derivatives modulo 2**M, the radius N_M(f), and transitivity certificates.

Everything here is finite-precision: a map is only ever examined on
``width``-bit words, so a certified radius means "certified at this width".
Global claims come only from the transitivity criterion (a map uniformly
differentiable mod 4 is transitive iff it is transitive modulo
``2**(N_2 + 2)``), which :func:`certify_transitive` applies explicitly.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .expr import TMap
from .word import mask

MAX_BRUTE_BITS = 24
MAX_TABLE_BITS = 24      # derivative tables hold 2**K entries
DEFAULT_TABLE_BITS = 20
DENSE_BITS = 14          # exhaustive low block of test points
RANDOM_POINTS = 4096     # plus this many random full-width points


class Verdict(str, enum.Enum):
    PASS = "Pass"
    CERTIFIED = "Certified-at-width"
    REFUTED = "Refuted"
    INCONCLUSIVE = "Inconclusive"


class TransitivityStatus(str, enum.Enum):
    CERTIFIED_BY_THEOREM = "CertifiedByTheorem"
    BRUTE_FORCE_ONLY = "BruteForceOnly"
    REFUTED = "Refuted"


class WidthTooSmall(ValueError):
    pass


class NotCompatible(ArithmeticError):
    """``f(x + 2**K) - f(x)`` is not divisible by ``2**K``."""

    def __init__(self, x: int, K: int):
        super().__init__(f"f(x + 2**{K}) - f(x) not divisible by 2**{K} at x={x}")
        self.x = x
        self.K = K


class AlphaViolation(ArithmeticError):
    """The iterate quotient phi(x) came out even: the map is not transitive."""


@dataclass(frozen=True)
class CompatibilityResult:
    verdict: Verdict
    witness: tuple[int, int, int] | None = None  # (a, b, s)
    samples: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS


@dataclass(frozen=True)
class DiffReport:
    M: int
    K: int | None
    width: int
    verdict: Verdict
    table: tuple[int, ...] | None = None
    witness: dict | None = None

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    def derivative(self, x: int) -> int:
        if self.table is None:
            raise ValueError(f"no derivative table ({self.verdict.value})")
        return self.table[int(x) & ((1 << self.K) - 1)]

    def to_json(self) -> dict:
        out = {"M": self.M, "K": self.K, "width": self.width,
               "verdict": self.verdict.value,
               "table": list(self.table) if self.table is not None else None}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class TransitivityCertificate:
    status: TransitivityStatus
    n2: int | None
    checked_bits: int
    report: DiffReport | None = None
    witness: dict | None = None

    @property
    def transitive(self) -> bool:
        return self.status is not TransitivityStatus.REFUTED

    def to_json(self) -> dict:
        out = {"status": self.status.value, "N2": self.n2, "checked_bits": self.checked_bits}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class ProductCheck:
    verdict: Verdict
    N2: int
    samples: int
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS


@dataclass(frozen=True)
class ProofProbe:
    """Bookkeeping of the transitivity arguments for one start point.

    ``phi`` is ``(f^(2^s)(x) - x) / 2^s mod 8`` with ``s = n-1`` (linear) or
    ``n-2`` (quadratic); ``alpha, beta, gamma`` are its three low bits and
    ``beta_from_bits`` the same ``beta`` read off the coordinate bits.
    ``lambda_`` and ``eta`` are bits 1 and 2 of the derivative of ``f^i``
    modulo 8 at ``x``, one entry per ``i`` requested.
    """

    n: int
    x: int
    quadratic: bool
    phi: int
    alpha: int
    beta: int
    beta_from_bits: int
    gamma: int | None = None
    lambda_: tuple[int, ...] = field(default=())
    eta: tuple[int, ...] = field(default=())

    @property
    def consistent(self) -> bool:
        return self.alpha == 1 and self.beta == self.beta_from_bits


# ------------------------------------------------------------ compatibility


def check_compatibility(f: TMap, samples: int = 2000, seed: int = 0) -> CompatibilityResult:
    """Sample ``(a, b, s)`` with ``a = b mod 2**s`` and compare ``f(a), f(b) mod 2**s``."""
    w = f.width
    rng = np.random.default_rng(seed)
    m = mask(w)
    a = rng.integers(0, 1 << min(w, 63), size=samples, dtype=np.uint64)
    if w == 64:
        a |= rng.integers(0, 2, size=samples, dtype=np.uint64) << np.uint64(63)
    s = rng.integers(0, w + 1, size=samples)
    # Also the tightest pairs b = a + 2**s for every s.
    s = np.concatenate([s, np.arange(w + 1)])
    a = np.concatenate([a, rng.integers(0, 1 << min(w, 63), size=w + 1, dtype=np.uint64)])
    r = rng.integers(0, 1 << min(w, 63), size=a.size, dtype=np.uint64)
    r[samples:] = 1
    with np.errstate(over="ignore"):
        step = np.where(s >= 64, np.uint64(0),
                        np.left_shift(np.uint64(1), np.minimum(s, 63).astype(np.uint64)))
        b = (a + r * step) & np.uint64(m)
        fa, fb = f.values(a), f.values(b)
        low = np.where(s >= 64, np.uint64(m),
                       np.left_shift(np.uint64(1), np.minimum(s, 63).astype(np.uint64)) - np.uint64(1))
        bad = np.flatnonzero(((fa ^ fb) & low) != 0)
    if bad.size:
        k = bad[0]
        return CompatibilityResult(Verdict.REFUTED, (int(a[k]), int(b[k]), int(s[k])), a.size)
    return CompatibilityResult(Verdict.PASS, None, a.size)


# --------------------------------------------------------------- derivatives


def _derivatives(f: TMap, M: int, K: int, xs: np.ndarray) -> np.ndarray:
    """Vector form of :func:`derivative_mod`; raises NotCompatible on a bad x."""
    m = np.uint64(mask(f.width))
    step = np.uint64(1 << K)
    with np.errstate(over="ignore"):
        diff = (f.values((xs + step) & m) - f.values(xs)) & m
    low = diff & np.uint64((1 << K) - 1)
    bad = np.flatnonzero(low)
    if bad.size:
        raise NotCompatible(int(xs[bad[0]]), K)
    return (diff >> np.uint64(K)) & np.uint64((1 << M) - 1)


def derivative_mod(f: TMap, M: int, K: int, x: int) -> int:
    """``((f(x + 2**K) - f(x)) / 2**K) mod 2**M``, the candidate derivative at radius K."""
    if M < 1 or K < 0:
        raise ValueError("need M >= 1 and K >= 0")
    if K + M > f.width:
        raise WidthTooSmall(f"K + M = {K + M} exceeds width {f.width}")
    return int(_derivatives(f, M, K, np.array([int(x)], dtype=np.uint64))[0])


def orbit_derivatives(f: TMap, x: int, steps: int, M: int, radius: int) -> np.ndarray:
    """Derivatives of ``f^i`` modulo ``2**M`` at ``x`` for ``i = 0..steps``.

    Read off two orbits started ``2**radius`` apart; valid whenever ``radius``
    is at least ``N_M(f)`` (iterates keep the radius).
    """
    if radius + M > f.width:
        raise WidthTooSmall(f"radius + M = {radius + M} exceeds width {f.width}")
    m = np.uint64(mask(f.width))
    base = f.orbit(int(x), steps)
    moved = f.orbit((int(x) + (1 << radius)) & int(m), steps)
    with np.errstate(over="ignore"):
        diff = (moved - base) & m
    if np.any(diff & np.uint64((1 << radius) - 1)):
        raise NotCompatible(int(x), radius)
    return ((diff >> np.uint64(radius)) & np.uint64((1 << M) - 1)).astype(np.int64)


def _odd_multipliers(rng: np.random.Generator, count: int, bits: int) -> list[int]:
    if bits <= 1:
        return [1]
    out = [1]
    for v in rng.integers(0, 1 << min(bits, 62), size=count, dtype=np.uint64):
        out.append(int(v) | 1)
    return out


def _check_radius(f: TMap, M: int, K: int, table: np.ndarray, xs: np.ndarray,
                  hs: list[tuple[int, int]], workers: int) -> dict | None:
    """First ``(x, h)`` breaking ``f(x+h) = f(x) + f'(x) h  (mod 2**(ord h + M))``."""
    w = f.width
    m = np.uint64(mask(w))
    fx = f.values(xs)
    d = table[(xs & np.uint64((1 << K) - 1)).astype(np.int64)]

    def scan(jr: tuple[int, int]) -> dict | None:
        j, r = jr
        h = np.uint64((r << j) & mask(w))
        with np.errstate(over="ignore"):
            lhs = f.values((xs + h) & m)
            err = (lhs - fx - d * h) & np.uint64((1 << (j + M)) - 1)
        bad = np.flatnonzero(err)
        if bad.size:
            k = bad[0]
            return {"x": int(xs[k]), "h": int(h), "modulus_bits": j + M,
                    "derivative": int(d[k])}
        return None

    if workers > 1 and len(hs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(scan, hs):
                if res is not None:
                    return res
        return None
    for jr in hs:
        res = scan(jr)
        if res is not None:
            return res
    return None


def estimate_NM(f: TMap, M: int, K_max: int | None = None, h_samples: int = 16,
                seed: int = 0, workers: int = 1) -> DiffReport:
    """Smallest radius ``K`` at which ``f`` is uniformly differentiable mod ``2**M``.

    For each ``K = 1, 2, ...`` the derivative table over residues mod ``2**K``
    is built from :func:`derivative_mod`, then the defining congruence is
    tested for every ``x`` below ``2**min(width - M, K + M + 2, 14)``, for
    4096 random full-width ``x``, and for ``h = r * 2**j`` with
    ``K <= j <= width - M - 1``, ``r`` = 1 plus ``h_samples`` random odd
    multipliers.  The table must also predict the radius-K derivative at
    every tested ``x`` (it is ``2**K``-periodic).

    The default ``K_max = min(width - M - 2, 20)`` keeps at least two dyadic
    scales in every test, so a certificate never rests on the table's own
    ``h``, and keeps the table small.
    """
    w = f.width
    if K_max is None:
        K_max = min(w - M - 2, DEFAULT_TABLE_BITS)
    if K_max < 1 or K_max + M > w:
        raise WidthTooSmall(f"K_max={K_max}, M={M} do not fit width {w}")
    if K_max > MAX_TABLE_BITS:
        raise ValueError(f"K_max={K_max} would need a table of 2**{K_max} entries")
    K_max = min(K_max, w - M - 1)  # j = K must exist
    rng = np.random.default_rng(seed)
    spread = rng.integers(0, 1 << min(w, 63), size=RANDOM_POINTS, dtype=np.uint64)
    last_witness: dict | None = None
    for K in range(1, K_max + 1):
        xs_table = np.arange(1 << K, dtype=np.uint64)
        try:
            table = _derivatives(f, M, K, xs_table)
        except NotCompatible as exc:
            return DiffReport(M, K, w, Verdict.REFUTED, None,
                              {"x": exc.x, "h": 1 << K, "reason": "not compatible"})
        xs = np.concatenate([np.arange(1 << min(w - M, K + M + 2, DENSE_BITS), dtype=np.uint64),
                             spread])
        try:
            local = _derivatives(f, M, K, xs)
        except NotCompatible as exc:
            return DiffReport(M, K, w, Verdict.REFUTED, None,
                              {"x": exc.x, "h": 1 << K, "reason": "not compatible"})
        expected = table[(xs & np.uint64((1 << K) - 1)).astype(np.int64)]
        mismatch = np.flatnonzero(local != expected)
        if mismatch.size:
            k = mismatch[0]
            last_witness = {"x": int(xs[k]), "h": 1 << K, "modulus_bits": K + M,
                            "derivative": int(expected[k]), "reason": "not periodic"}
            continue
        hs = [(j, r) for j in range(K, w - M)
              for r in _odd_multipliers(rng, h_samples, w - j)]
        bad = _check_radius(f, M, K, table, xs, hs, workers)
        if bad is None:
            return DiffReport(M, K, w, Verdict.CERTIFIED, tuple(int(v) for v in table))
        last_witness = bad
    return DiffReport(M, None, w, Verdict.INCONCLUSIVE, None, last_witness)


def check_report_witness(f: TMap, report: DiffReport) -> bool:
    """Re-check that a stored witness really breaks the congruence."""
    wit = report.witness
    if wit is None or "modulus_bits" not in wit:
        return False
    x, h, bits = wit["x"], wit["h"], wit["modulus_bits"]
    mod = (1 << bits) - 1
    return (f(x + h) - f(x) - wit["derivative"] * h) & mod != 0


# ----------------------------------------------------------- brute force


def _brute_bits(f: TMap, n: int) -> int:
    if not 1 <= n <= min(f.width, MAX_BRUTE_BITS):
        raise ValueError(f"n={n} outside [1, min(width={f.width}, {MAX_BRUTE_BITS})]")
    return n


def is_bijective_bruteforce(f: TMap, n: int) -> bool:
    g = f.at_width(_brute_bits(f, n))
    image = g.values(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    seen = np.zeros(1 << n, dtype=bool)
    seen[image] = True
    return bool(seen.all())


def is_transitive_bruteforce(f: TMap, n: int) -> bool:
    g = f.at_width(_brute_bits(f, n))
    return g.cycle_length(0, 1 << n) == 1 << n


def certify_transitive(f: TMap, K_max: int | None = None, h_samples: int = 16,
                       workers: int = 1) -> TransitivityCertificate:
    """Certify transitivity via N_2 and one cycle check modulo ``2**(N_2 + 2)``."""
    report: DiffReport | None = None
    if f.width >= 5:  # room for K = 1 with two dyadic scales
        report = estimate_NM(f, 2, K_max, h_samples, workers=workers)
    if report is not None and report.certified and report.K + 2 <= f.width:
        n = report.K + 2
        if is_transitive_bruteforce(f, n):
            return TransitivityCertificate(TransitivityStatus.CERTIFIED_BY_THEOREM,
                                           report.K, n, report)
        return TransitivityCertificate(TransitivityStatus.REFUTED, report.K, n, report,
                                       {"modulus_bits": n,
                                        "cycle_of_0": f.at_width(n).cycle_length(0, 1 << n)})
    n = min(f.width, MAX_BRUTE_BITS)
    if is_transitive_bruteforce(f, n):
        return TransitivityCertificate(TransitivityStatus.BRUTE_FORCE_ONLY, None, n, report)
    return TransitivityCertificate(TransitivityStatus.REFUTED, None, n, report,
                                   {"modulus_bits": n,
                                    "cycle_of_0": f.at_width(n).cycle_length(0, 1 << n)})


# ----------------------------------------------------- proof bookkeeping


def derivative_product_check(f: TMap, N2: int, z_samples: int | None = None,
                             zs=None, seed: int = 0) -> ProductCheck:
    """Product of ``f'_2`` along ``2**N2`` consecutive iterates, expected 1 mod 4.

    ``zs`` defaults to every residue below ``2**min(width, 10)``; pass
    ``z_samples`` to draw that many random start points instead.
    """
    if N2 + 2 > f.width:
        raise WidthTooSmall(f"N2 + 2 = {N2 + 2} exceeds width {f.width}")
    table = _derivatives(f, 2, N2, np.arange(1 << N2, dtype=np.uint64)).astype(np.int64)
    if zs is None:
        if z_samples is None:
            zs = np.arange(1 << min(f.width, 10), dtype=np.uint64)
        else:
            rng = np.random.default_rng(seed)
            zs = rng.integers(0, 1 << min(f.width, 63), size=z_samples, dtype=np.uint64)
    z = np.asarray(zs, dtype=np.uint64)
    cur = z.copy()
    prod = np.ones(z.size, dtype=np.int64)
    low = np.uint64((1 << N2) - 1)
    for _ in range(1 << N2):
        prod = (prod * table[(cur & low).astype(np.int64)]) & 3
        cur = f.values(cur)
    bad = np.flatnonzero(prod != 1)
    if bad.size:
        k = bad[0]
        return ProductCheck(Verdict.REFUTED, N2, z.size, {"z": int(z[k]), "product": int(prod[k])})
    return ProductCheck(Verdict.PASS, N2, z.size)


def proof_probe(f: TMap, n: int, x: int, quadratic: bool = False,
                iterates: range | None = None, radius: int | None = None) -> ProofProbe:
    """Compute phi, alpha, beta (and gamma, lambda, eta) for the orbit of ``x``.

    ``iterates`` selects the ``i`` for which ``lambda(i), eta(i)`` are read
    from the derivative of ``f^i`` modulo 8 at radius ``radius`` (which must
    be at least N_3(f)).
    """
    shift = n - 2 if quadratic else n - 1
    if shift < 0:
        raise ValueError("level too small")
    if f.width < n + 2:
        raise WidthTooSmall(f"need width >= n + 2 = {n + 2}")
    m = mask(f.width)
    x = int(x) & m
    y = int(f.orbit(x, 1 << shift)[-1])
    phi = (((y - x) & m) >> shift) & 7
    if not phi & 1:
        raise AlphaViolation(f"phi({x}) = {phi} is even at level {n}: f is not transitive")
    bit = lambda v, j: (v >> j) & 1  # noqa: E731
    if quadratic:
        beta_bits = bit(x, n - 1) ^ bit(x, n - 2) ^ bit(y, n - 1)
    else:
        beta_bits = bit(x, n - 1) ^ bit(x, n) ^ bit(y, n)
    lam: tuple[int, ...] = ()
    eta: tuple[int, ...] = ()
    if iterates is not None:
        if radius is None:
            raise ValueError("radius (>= N_3) is required to read lambda/eta")
        d = orbit_derivatives(f, x, max(iterates) if len(iterates) else 0, 3, radius)
        lam = tuple(int((d[i] >> 1) & 1) for i in iterates)
        eta = tuple(int((d[i] >> 2) & 1) for i in iterates)
    return ProofProbe(n, x, quadratic, phi, phi & 1, (phi >> 1) & 1, beta_bits,
                      (phi >> 2) & 1 if quadratic else None, lam, eta)
