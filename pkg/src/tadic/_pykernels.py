"""Pure-Python evaluation kernels (fallback when the C extension is absent).

Scalar paths use Python ints; ``eval_many`` runs the program once over a
whole numpy array, one vector operation per instruction.
"""
from __future__ import annotations

import numpy as np

from ._opcodes import (ADD, AND, DIV, LIT, MUL, NEG, NOT, OR, POW, POWLIT,
                       SUB, VAR, XOR, ParityError)

NAME = "python"


def _inv(a: int, m: int) -> int:
    x = a
    for _ in range(6):
        x = (x * (2 - a * x)) & m
    return x


def _run(ops, args, m: int, em: int, x: int) -> int:
    st: list[int] = []
    push, pop = st.append, st.pop
    for i, op in enumerate(ops):
        if op == VAR:
            push(x)
        elif op == LIT:
            push(args[i])
        elif op == NEG:
            push(-pop() & m)
        elif op == NOT:
            push(~pop() & m)
        elif op == POWLIT:
            push(pow(pop(), args[i], m + 1))
        else:
            b = pop()
            a = pop()
            if op == ADD:
                push((a + b) & m)
            elif op == SUB:
                push((a - b) & m)
            elif op == MUL:
                push((a * b) & m)
            elif op == AND:
                push(a & b)
            elif op == OR:
                push(a | b)
            elif op == XOR:
                push(a ^ b)
            elif op == DIV:
                if not b & 1:
                    raise ParityError(i, x)
                push((a * _inv(b, m)) & m)
            elif op == POW:
                if not a & 1:
                    raise ParityError(i, x)
                push(pow(a, b & em, m + 1))
            else:  # pragma: no cover
                raise ValueError(f"bad opcode {op}")
    return st[-1]


def _prep(ops, args, width):
    m = (1 << width) - 1
    em = (1 << (width - 1)) - 1
    return [int(o) for o in ops], [int(a) for a in args], m, em


def eval_one(ops, args, width: int, x: int) -> int:
    o, a, m, em = _prep(ops, args, width)
    return _run(o, a, m, em, int(x) & m)


def orbit(ops, args, width: int, x0: int, steps: int) -> np.ndarray:
    o, a, m, em = _prep(ops, args, width)
    out = np.empty(steps + 1, dtype=np.uint64)
    x = int(x0) & m
    out[0] = x
    for i in range(1, steps + 1):
        try:
            x = _run(o, a, m, em, x)
        except ParityError as exc:
            raise ParityError(exc.op_index, exc.x, i - 1) from None
        out[i] = x
    return out


def cycle_length(ops, args, width: int, x0: int, limit: int) -> int:
    """Steps until the orbit of ``x0`` returns to it; 0 if not within ``limit``."""
    o, a, m, em = _prep(ops, args, width)
    start = x = int(x0) & m
    for i in range(1, limit + 1):
        x = _run(o, a, m, em, x)
        if x == start:
            return i
    return 0


def _vinv(b: np.ndarray, m: np.uint64) -> np.ndarray:
    x = b.copy()
    two = np.uint64(2)
    for _ in range(6):
        x = x * (two - b * x)
    return x & m


def _vpow(base: np.ndarray, exp: np.ndarray, m: np.uint64) -> np.ndarray:
    result = np.ones_like(base)
    b = base.copy()
    e = exp.copy()
    one = np.uint64(1)
    while e.any():
        sel = (e & one).astype(bool)
        result[sel] = result[sel] * b[sel]
        b = b * b
        e >>= one
    return result & m


def eval_many(ops, args, width: int, xs: np.ndarray) -> np.ndarray:
    m = np.uint64((1 << width) - 1)
    em = np.uint64((1 << (width - 1)) - 1)
    x = np.asarray(xs, dtype=np.uint64) & m
    st: list[np.ndarray] = []
    with np.errstate(over="ignore"):
        for i, (op, arg) in enumerate(zip(ops, args)):
            op = int(op)
            if op == VAR:
                st.append(x)
            elif op == LIT:
                st.append(np.full(x.shape, arg, dtype=np.uint64))
            elif op == NEG:
                st.append((np.uint64(0) - st.pop()) & m)
            elif op == NOT:
                st.append(~st.pop() & m)
            elif op == POWLIT:
                st.append(_vpow(st.pop(), np.full(x.shape, arg, dtype=np.uint64), m))
            else:
                b = st.pop()
                a = st.pop()
                if op == ADD:
                    st.append((a + b) & m)
                elif op == SUB:
                    st.append((a - b) & m)
                elif op == MUL:
                    st.append((a * b) & m)
                elif op == AND:
                    st.append(a & b)
                elif op == OR:
                    st.append(a | b)
                elif op == XOR:
                    st.append(a ^ b)
                elif op == DIV:
                    bad = np.flatnonzero((b & np.uint64(1)) == 0)
                    if bad.size:
                        raise ParityError(i, int(x[bad[0]]))
                    st.append((a * _vinv(b, m)) & m)
                elif op == POW:
                    bad = np.flatnonzero((a & np.uint64(1)) == 0)
                    if bad.size:
                        raise ParityError(i, int(x[bad[0]]))
                    st.append(_vpow(a, b & em, m))
                else:  # pragma: no cover
                    raise ValueError(f"bad opcode {op}")
    return st[-1]
