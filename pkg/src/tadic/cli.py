"""Command-line front end: ``tadic <subcommand> ...``.

Exit status: 0 when everything checked holds or is certified, 2 when some
relation is violated or some certificate refuted (the witness is in the
output), 1 on usage, input or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import _backend, calculus, catalog, generators, relations
from .expr import ExprError, dump, parse, to_json, to_text
from .word import BitSeq, dumps_bitseqs, read_bitseq

EXIT_OK, EXIT_USAGE, EXIT_VIOLATED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _workers(value: int | None) -> int:
    if value is None:
        env = os.environ.get("TADIC_WORKERS")
        value = int(env) if env else (os.cpu_count() or 1)
    if value < 1:
        raise UsageError("--workers must be at least 1")
    return value


def _emit(payload: dict, fmt: str, human: str | None = None, bits: str | None = None) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    elif fmt == "bits":
        if bits is None:
            raise UsageError("this subcommand has no bit-sequence output")
        sys.stdout.write(bits)
    else:
        sys.stdout.write((human if human is not None else json.dumps(payload, indent=2)) + "\n")


def _function(args):
    if not args.expr:
        raise UsageError("--expr is required")
    if not 1 <= args.width <= 64:
        raise UsageError("--width must be in [1, 64]")
    return catalog.resolve(args.expr, args.width)


# ------------------------------------------------------------- subcommands


def cmd_parse(args) -> int:
    if not args.expr:
        raise UsageError("--expr is required")
    text = catalog.SUITE.get(args.expr[1:], args.expr) if args.expr.startswith("@") else args.expr
    tree = parse(text)
    payload = {"expr": to_text(tree), "ast": to_json(tree)}
    _emit(payload, args.out, human=dump(tree).rstrip("\n"))
    return EXIT_OK


def cmd_analyze(args) -> int:
    f = _function(args)
    workers = _workers(args.workers)
    compat = calculus.check_compatibility(f, samples=args.samples)
    reports = []
    for M in args.M:
        if M + 3 <= f.width:
            reports.append(calculus.estimate_NM(f, M, h_samples=args.h_samples, workers=workers))
    cert = calculus.certify_transitive(f, workers=workers)
    n2 = next((r.K for r in reports if r.M == 2 and r.certified), None)
    brute_bits = min(f.width, calculus.MAX_BRUTE_BITS)
    payload = {
        "expr": f.source, "width": f.width, "N2": n2,
        "compatibility": {"verdict": compat.verdict.value,
                          "witness": list(compat.witness) if compat.witness else None},
        "reports": [r.to_json() for r in reports],
        "transitivity": cert.to_json(),
        "bijective": calculus.is_bijective_bruteforce(f, brute_bits),
        "bijective_bits": brute_bits,
    }
    lines = [f"f = {f.source}  (width {f.width})",
             f"compatibility: {compat.verdict.value}"]
    for r in reports:
        lines.append(f"N_{r.M}: {r.K if r.certified else '-'} ({r.verdict.value})")
    lines.append(f"transitivity: {cert.status.value}"
                 + (f" with N2={cert.n2}" if cert.n2 is not None else ""))
    _emit(payload, args.out, human="\n".join(lines))
    refuted = (not compat.passed or cert.status is calculus.TransitivityStatus.REFUTED
               or any(r.verdict is calculus.Verdict.REFUTED for r in reports))
    return EXIT_VIOLATED if refuted else EXIT_OK


def cmd_coords(args) -> int:
    f = _function(args)
    if args.n is None or args.len is None:
        raise UsageError("coords needs --n and --len")
    s = relations.coordinate_sequence(f, args.x0, args.n, args.len)
    payload = {"expr": f.source, "width": f.width, "x0": args.x0, "n": args.n,
               "len": args.len, "bits": s.to_string()}
    fmt = args.out or "bits"
    _emit(payload, fmt, human=s.to_string(), bits=s.to_string() + "\n")
    return EXIT_OK


def _radius(f, M: int, given: int | None, workers: int, flag: str) -> int:
    if given is not None:
        return given
    rep = calculus.estimate_NM(f, M, workers=workers)
    if not rep.certified:
        raise UsageError(f"N_{M} estimation was {rep.verdict.value}; pass {flag} explicitly")
    return rep.K


def cmd_relation(args) -> int:
    f = _function(args)
    workers = _workers(args.workers)
    lo_default = None
    if args.kind == "lin":
        N = _radius(f, 2, args.n2, workers, "--n2")
        lo_default = N + 1
    else:
        N = _radius(f, 3, args.n3, workers, "--n3")
        lo_default = N + 2
    n_from = args.n_from if args.n_from is not None else lo_default
    n_to = args.n_to if args.n_to is not None else min(f.width - 1, 16)
    if n_from > n_to:
        raise UsageError(f"empty level range [{n_from}, {n_to}]")
    if n_to >= f.width:
        raise UsageError(f"--n-to must be below the width {f.width}")
    if args.kind == "lin":
        profiles = [relations.extract_linear(f, args.x0, n, N) for n in range(n_from, n_to + 1)]
    else:
        profiles = [relations.extract_quadratic(f, args.x0, n, N, args.theta_mode)
                    for n in range(n_from, n_to + 1)]
    payload = {"expr": f.source, "width": f.width, "x0": args.x0, "kind": args.kind,
               "N": N, "profiles": [p.to_json() for p in profiles]}
    if args.kind == "lin" and n_to > n_from:
        ind = relations.check_n_independence(f, args.x0, n_from, n_to, N)
        payload["n_independence"] = {"verdict": ind.verdict.value,
                                     "witness": list(ind.witness) if ind.witness else None}
    lines = [f"f = {f.source}  (width {f.width}, x0={args.x0}, N={N})"]
    for p in profiles:
        extra = f" theta={p.theta}" if p.kind == "Quadratic" else ""
        lines.append(f"n={p.n}: {p.verdict.value} period={p.measured_period} "
                     f"bound={p.bound} c={p.constant}{extra}"
                     + (f" witness i={p.witness}" if p.witness is not None else ""))
    bits = dumps_bitseqs(BitSeq(p.y.bits, coord=p.n) for p in profiles)
    _emit(payload, args.out, human="\n".join(lines), bits=bits)
    violated = any(p.verdict is relations.RelationVerdict.VIOLATED for p in profiles)
    violated |= payload.get("n_independence", {}).get("verdict") == "Violated"
    return EXIT_VIOLATED if violated else EXIT_OK


def cmd_recover(args) -> int:
    if not (args.hi and args.lo and args.n is not None and args.n2 is not None):
        raise UsageError("recover needs --hi, --lo, --n and --n2")
    try:
        hi, lo = read_bitseq(args.hi), read_bitseq(args.lo)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    try:
        res = relations.recover(hi, lo, args.n2, n=args.n)
    except relations.RelationViolated as exc:
        payload = {"error": "RelationViolated", "level": exc.level, "i": exc.i, "message": str(exc)}
        _emit(payload, "json" if args.out == "bits" else args.out, human=str(exc))
        return EXIT_VIOLATED
    payload = res.to_json()
    lines = [f"recovered levels {res.floor}..{res.top - 2} from levels {res.top - 1}, {res.top}"]
    lines += [f"m={m}: {a.to_string()[:64]}{'...' if a.length > 64 else ''}"
              for m, (a, _) in sorted(res.levels.items(), reverse=True)]
    bits = dumps_bitseqs(s for m in sorted(res.levels, reverse=True) for s in res.levels[m])
    _emit(payload, args.out, human="\n".join(lines), bits=bits)
    return EXIT_OK


def _profiles_from_stream(stream: np.ndarray, levels, N2: int) -> list[relations.RelationProfile]:
    out = []
    for n in levels:
        q = 1 << n
        if stream.size < q:
            break
        a = ((stream[: q // 2] >> np.uint64(n - 1)) & np.uint64(1)).astype(np.uint8)
        b = ((stream[:q] >> np.uint64(n)) & np.uint64(1)).astype(np.uint8)
        out.append(relations.linear_profile(a, b, n, N2))
    return out


def cmd_multivar(args) -> int:
    if not args.config:
        raise UsageError("multivar needs --config")
    cfg = generators.load_config(args.config)
    workers = _workers(args.workers)
    if "skeleton" in cfg:
        sk = cfg["skeleton"]
        k = int(sk["k"])
        ones = set(int(z) for z in sk.get("v_ones", [0]))
        f = generators.tsc_univariate(catalog.resolve(sk.get("u", "x + 1"), k),
                                      [int(z in ones) for z in range(1 << k)], k,
                                      int(sk.get("sigma", 1)), int(sk.get("epsilon", 0)),
                                      int(sk.get("t", 6)))
        N2, column0 = k, None
    else:
        spec = generators.load_tsc_spec(cfg)
        f = generators.TscMap(spec)
        column0 = f.at_width(spec.m).cycle_length(0, 1 << spec.m)
        N2 = None
    width = f.width
    if N2 is None and width >= 4:
        rep = calculus.estimate_NM(f, 2, workers=workers)
        N2 = rep.K if rep.certified else None
    bits = min(width, calculus.MAX_BRUTE_BITS)
    transitive = calculus.is_transitive_bruteforce(f, bits)
    n_to = min(width - 1, args.n_to if args.n_to is not None else 16)
    profiles = []
    if N2 is not None:
        n_from = args.n_from if args.n_from is not None else N2 + 1
        stream = f.orbit(args.x0, 1 << n_to)
        profiles = _profiles_from_stream(stream, range(n_from, n_to + 1), N2)
    payload = {"width": width, "transitive": transitive, "checked_bits": bits,
               "N2": N2, "column0_period": column0,
               "profiles": [p.to_json() for p in profiles]}
    lines = [f"{f.name}: width {width}, transitive mod 2**{bits}: {transitive}, N2={N2}"]
    lines += [f"n={p.n}: {p.verdict.value} period={p.measured_period}" for p in profiles]
    _emit(payload, args.out, human="\n".join(lines))
    bad = not transitive or any(p.verdict is relations.RelationVerdict.VIOLATED for p in profiles)
    return EXIT_VIOLATED if bad else EXIT_OK


def cmd_wreath(args) -> int:
    if not args.config:
        raise UsageError("wreath needs --config")
    spec = generators.load_wreath_spec(args.config, args.width)
    workers = _workers(args.workers)
    k, p = spec.width, spec.p
    if k > calculus.MAX_BRUTE_BITS:
        raise UsageError(f"wreath analysis walks full cycles; width {k} is too large")
    steps = args.steps if args.steps is not None else 2 * p << k
    seq = generators.wreath_run(spec, args.x0, steps)
    period = generators.sequence_period(seq)
    branches = []
    for r in range(p):
        w = generators.composition_map(spec, r)
        transitive = calculus.is_transitive_bruteforce(w, k)
        N2 = None
        if k >= 4:
            rep = calculus.estimate_NM(w, 2, workers=workers)
            N2 = rep.K if rep.certified else None
        dec = generators.wreath_decimate(seq, p, r)
        profiles = []
        if N2 is not None:
            profiles = _profiles_from_stream(dec, range(N2 + 1, k), N2)
        branches.append({"r": r, "transitive": transitive, "N2": N2,
                         "profiles": [q.to_json() for q in profiles]})
    payload = {"width": k, "p": p, "control": spec.control.kind, "steps": steps,
               "period": period,
               "period_divides": period is not None and (p << k) % period == 0,
               "branches": branches}
    lines = [f"wreath p={p} width {k}: stream period {period}"]
    for b in branches:
        lines.append(f"w_{b['r']}: transitive={b['transitive']} N2={b['N2']} "
                     + " ".join(q["verdict"] for q in b["profiles"]))
    _emit(payload, args.out, human="\n".join(lines))
    bad = not payload["period_divides"] or any(
        not b["transitive"] or any(q["verdict"] == "Violated" for q in b["profiles"])
        for b in branches)
    return EXIT_VIOLATED if bad else EXIT_OK


# ------------------------------------------------------------------ parser


def _int(text: str) -> int:
    return int(text, 0)


def _levels(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--expr", help="expression in x, or @name from the catalog")
    common.add_argument("--width", type=int, default=None, help="word width k (default 16)")
    common.add_argument("--x0", type=_int, default=1, help="orbit start (default 1)")
    common.add_argument("--out", choices=["json", "bits", "human"], default=None)
    common.add_argument("--workers", type=int, default=None,
                        help="threads for scans (default $TADIC_WORKERS or CPU count)")
    common.add_argument("--meta", action="store_true",
                        help="print backend and timing to stderr")

    parser = _Parser(prog="tadic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("parse", parents=[common], help="parse and print the AST")

    p = sub.add_parser("analyze", parents=[common], help="derivatives, N_M and transitivity")
    p.add_argument("--M", type=_levels, default=[1, 2, 3], help="comma list of M (default 1,2,3)")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--h-samples", type=int, default=16)

    p = sub.add_parser("coords", parents=[common], help="one coordinate sequence")
    p.add_argument("--n", type=int)
    p.add_argument("--len", type=int)

    p = sub.add_parser("relation", parents=[common], help="linear or quadratic relation")
    p.add_argument("--kind", choices=["lin", "quad"], default="lin")
    p.add_argument("--n-from", type=int)
    p.add_argument("--n-to", type=int)
    p.add_argument("--n2", type=int, help="use this N_2 instead of estimating it")
    p.add_argument("--n3", type=int, help="use this N_3 instead of estimating it")
    p.add_argument("--theta-mode", choices=["constant", "per-iterate"], default="constant")

    p = sub.add_parser("recover", parents=[common], help="recover lower coordinate sequences")
    p.add_argument("--hi", type=Path, help="bit file of level n")
    p.add_argument("--lo", type=Path, help="bit file of level n-1")
    p.add_argument("--n", type=int)
    p.add_argument("--n2", type=int)

    p = sub.add_parser("multivar", parents=[common], help="TSC-style or skeleton generator")
    p.add_argument("--config", type=Path)
    p.add_argument("--n-from", type=int)
    p.add_argument("--n-to", type=int)

    p = sub.add_parser("wreath", parents=[common], help="counter-dependent generator")
    p.add_argument("--config", type=Path)
    p.add_argument("--steps", type=int)
    return parser


COMMANDS = {"parse": cmd_parse, "analyze": cmd_analyze, "coords": cmd_coords,
            "relation": cmd_relation, "recover": cmd_recover, "multivar": cmd_multivar,
            "wreath": cmd_wreath}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.out is None and args.command != "coords":
        args.out = "json"
    if args.width is None and args.command != "wreath":
        args.width = 16
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except (UsageError, ExprError, generators.ConfigError, generators.ConstructionInvalid,
            relations.TheoremOutOfRange, relations.SequenceTooShort, calculus.WidthTooSmall,
            KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"tadic {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    if args.meta:
        print(json.dumps({"backend": _backend.BACKEND,
                          "seconds": round(time.perf_counter() - start, 3)}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
