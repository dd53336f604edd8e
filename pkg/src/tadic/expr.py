"""A small expression language for univariate T-functions.

Grammar, lowest to highest precedence::

    expr  := or
    or    := xor ('|' xor)*
    xor   := and ('^' and)*
    and   := sum ('&' sum)*
    sum   := prod (('+' | '-') prod)*
    prod  := pow (('*' | '/') pow)*
    pow   := unary ('**' pow)?
    unary := ('-' | '~') unary | atom
    atom  := INT | 'x' | '(' expr ')'

``^`` is XOR and ``**`` is power.  ``a / b`` is 2-adic division and needs an
odd ``b``; ``a ** e`` with a non-literal exponent needs an odd ``a``.  Both
conditions are checked per input at evaluation time.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Union

import numpy as np

from . import _opcodes as opc
from ._backend import kernels as _default_kernels
from ._opcodes import ParityError
from .word import (Word, add, inv_odd, mask, mul, pow_mod, sub)

# ------------------------------------------------------------------ errors


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError, ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownIdentifier(ExprSyntaxError):
    pass


class EvaluationError(ExprError, ArithmeticError):
    def __init__(self, node: "Node", x: int, step: int | None = None):
        where = f" (iterate {step})" if step is not None else ""
        super().__init__(f"{self.what} in `{to_text(node)}` at x={x}{where}")
        self.node = node
        self.x = x
        self.step = step


class EvenDivisor(EvaluationError):
    what = "even divisor"


class EvenBaseVarExponent(EvaluationError):
    what = "even base under a computed exponent"


# --------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Var:
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Lit:
    value: int
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "not"
    operand: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str  # add sub mul div pow and or xor
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


Node = Union[Var, Lit, Unary, Binary]

BINARY_OPS = ("add", "sub", "mul", "div", "pow", "and", "or", "xor")
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**",
           "and": "&", "or": "|", "xor": "^", "neg": "-", "not": "~"}
_LEVEL = {"or": 1, "xor": 2, "and": 3, "add": 4, "sub": 4, "mul": 5, "div": 5, "pow": 6}
_UNARY_LEVEL = 7
_ATOM_LEVEL = 8

# ------------------------------------------------------------------ parser

_TOKEN = re.compile(
    r"\s*(?:(?P<int>0[xX][0-9a-fA-F]+|\d+)|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>\*\*|[-+*/&|^~()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        if kind == "name" and m.group(kind) != "x":
            raise UnknownIdentifier(f"unknown identifier {m.group(kind)!r}", start, text)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, message: str) -> ExprSyntaxError:
        _, val, pos = self.peek()
        found = repr(val) if val else "end of input"
        return ExprSyntaxError(f"{message}, found {found}", pos, self.text)

    def expect(self, sym: str) -> None:
        if self.peek()[1] != sym:
            raise self.error(f"expected {sym!r}")
        self.take()

    def parse(self) -> Node:
        node = self.binary(1)
        if self.peek()[0] != "end":
            raise self.error("expected an operator")
        return node

    _OPS_AT = {1: {"|": "or"}, 2: {"^": "xor"}, 3: {"&": "and"},
               4: {"+": "add", "-": "sub"}, 5: {"*": "mul", "/": "div"}}

    def binary(self, level: int) -> Node:
        if level == 6:
            return self.power()
        node = self.binary(level + 1)
        ops = self._OPS_AT[level]
        while self.peek()[0] == "op" and self.peek()[1] in ops:
            _, sym, pos = self.take()
            node = Binary(ops[sym], node, self.binary(level + 1), pos)
        return node

    def power(self) -> Node:
        base = self.unary()
        if self.peek()[1] == "**":
            _, _, pos = self.take()
            return Binary("pow", base, self.power(), pos)
        return base

    def unary(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "op" and val in ("-", "~"):
            self.take()
            return Unary("neg" if val == "-" else "not", self.unary(), pos)
        return self.atom()

    def atom(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "int":
            self.take()
            return Lit(int(val, 0), pos)
        if kind == "name":
            self.take()
            return Var(pos)
        if val == "(":
            self.take()
            node = self.binary(1)
            self.expect(")")
            return node
        raise self.error("expected a number, 'x' or '('")


def parse(text: str) -> Node:
    return _Parser(text).parse()


# ----------------------------------------------------------------- printer


def _level(node: Node) -> int:
    if isinstance(node, Binary):
        return _LEVEL[node.op]
    if isinstance(node, Unary) or (isinstance(node, Lit) and node.value < 0):
        return _UNARY_LEVEL
    return _ATOM_LEVEL


def _wrap(node: Node, min_level: int) -> str:
    s = to_text(node)
    return f"({s})" if _level(node) < min_level else s


def to_text(node: Node) -> str:
    """Render with the fewest parentheses that re-parse to the same tree."""
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Lit):
        return str(node.value)
    if isinstance(node, Unary):
        return _SYMBOL[node.op] + _wrap(node.operand, _UNARY_LEVEL)
    lvl = _LEVEL[node.op]
    if node.op == "pow":
        left, right = _wrap(node.left, _UNARY_LEVEL), _wrap(node.right, lvl)
    else:
        left, right = _wrap(node.left, lvl), _wrap(node.right, lvl + 1)
    return f"{left} {_SYMBOL[node.op]} {right}"


def dump(node: Node, indent: int = 0) -> str:
    """Indented tree listing, one node per line."""
    pad = "  " * indent
    if isinstance(node, Var):
        return f"{pad}Var(x)"
    if isinstance(node, Lit):
        return f"{pad}Lit({node.value})"
    if isinstance(node, Unary):
        return f"{pad}Unary({node.op})\n" + dump(node.operand, indent + 1)
    return (f"{pad}Binary({node.op})\n" + dump(node.left, indent + 1) + "\n"
            + dump(node.right, indent + 1))


def to_json(node: Node) -> dict:
    if isinstance(node, Var):
        return {"type": "var"}
    if isinstance(node, Lit):
        return {"type": "lit", "value": node.value}
    if isinstance(node, Unary):
        return {"type": "unary", "op": node.op, "operand": to_json(node.operand)}
    return {"type": "binary", "op": node.op, "left": to_json(node.left),
            "right": to_json(node.right)}


def substitute(node: Node, replacement: Node) -> Node:
    """Replace every occurrence of ``x`` by ``replacement``."""
    if isinstance(node, Var):
        return replacement
    if isinstance(node, Lit):
        return node
    if isinstance(node, Unary):
        return Unary(node.op, substitute(node.operand, replacement))
    return Binary(node.op, substitute(node.left, replacement),
                  substitute(node.right, replacement))


def _literal_exponent(node: Node) -> bool:
    return isinstance(node, Lit) and node.value >= 0


# ---------------------------------------------------------------- compiler

_BIN_OPCODE = {"add": opc.ADD, "sub": opc.SUB, "mul": opc.MUL, "div": opc.DIV,
               "and": opc.AND, "or": opc.OR, "xor": opc.XOR}
_EXP_CAP = 1 << 63


@dataclass(frozen=True, eq=False)
class Program:
    """Postfix form of an expression at a fixed width."""

    ops: np.ndarray
    args: np.ndarray
    width: int
    nodes: tuple

    def __len__(self) -> int:
        return len(self.ops)


def compile_expr(node: Node, width: int) -> Program:
    m = mask(width)
    ops: list[int] = []
    args: list[int] = []
    nodes: list[Node] = []

    def emit(op: int, arg: int, n: Node) -> None:
        ops.append(op)
        args.append(arg)
        nodes.append(n)

    def walk(n: Node) -> None:
        if isinstance(n, Var):
            emit(opc.VAR, 0, n)
        elif isinstance(n, Lit):
            emit(opc.LIT, n.value & m, n)
        elif isinstance(n, Unary):
            walk(n.operand)
            emit(opc.NEG if n.op == "neg" else opc.NOT, 0, n)
        elif n.op == "pow" and _literal_exponent(n.right):
            walk(n.left)
            e = n.right.value
            if e >= _EXP_CAP:
                # Same residue for every base: >= 64 kills even bases, and
                # 2**62 is a multiple of the odd unit group's exponent.
                e = (1 << 62) + e % (1 << 62)
            emit(opc.POWLIT, e, n)
        else:
            walk(n.left)
            walk(n.right)
            emit(opc.POW if n.op == "pow" else _BIN_OPCODE[n.op], 0, n)

    walk(node)
    return Program(np.asarray(ops, dtype=np.int32), np.asarray(args, dtype=np.uint64),
                   width, tuple(nodes))


def _translate(prog: Program, exc: ParityError) -> EvaluationError:
    node = prog.nodes[exc.op_index]
    cls = EvenDivisor if prog.ops[exc.op_index] == opc.DIV else EvenBaseVarExponent
    return cls(node, exc.x, exc.step)


# ------------------------------------------------------- reference walker


def evaluate_tree(node: Node, x: Word) -> Word:
    """Evaluate by walking the tree with :mod:`tadic.word` arithmetic.

    Slow; kept as the independent reference for the compiled kernels.
    """
    w = x.width
    if isinstance(node, Var):
        return x
    if isinstance(node, Lit):
        return Word(node.value, w)
    if isinstance(node, Unary):
        v = evaluate_tree(node.operand, x)
        return -v if node.op == "neg" else ~v
    a = evaluate_tree(node.left, x)
    if node.op == "pow":
        if _literal_exponent(node.right):
            return pow_mod(a, node.right.value, literal=True)
        if not a.value & 1:
            raise EvenBaseVarExponent(node, x.value)
        return pow_mod(a, evaluate_tree(node.right, x))
    b = evaluate_tree(node.right, x)
    if node.op == "add":
        return add(a, b)
    if node.op == "sub":
        return sub(a, b)
    if node.op == "mul":
        return mul(a, b)
    if node.op == "div":
        if not b.value & 1:
            raise EvenDivisor(node, x.value)
        return mul(a, inv_odd(b))
    if node.op == "and":
        return a & b
    if node.op == "or":
        return a | b
    return a ^ b


# -------------------------------------------------------------------- maps


class TMap:
    """A map on ``width``-bit words assumed compatible with congruences mod 2**s.

    Subclasses provide :meth:`apply`; the vector and orbit paths default to
    Python loops over it.
    """

    width: int
    name: str = "f"

    def apply(self, x: int) -> int:
        raise NotImplementedError

    def __call__(self, x):
        if isinstance(x, Word):
            if x.width != self.width:
                raise ValueError(f"input width {x.width} != map width {self.width}")
            return Word(self.apply(x.value), self.width)
        return self.apply(int(x) & mask(self.width))

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        return np.fromiter((self.apply(int(v)) for v in xs), dtype=np.uint64, count=xs.size)

    def orbit(self, x0: int, steps: int) -> np.ndarray:
        out = np.empty(steps + 1, dtype=np.uint64)
        x = int(x0) & mask(self.width)
        out[0] = x
        for i in range(1, steps + 1):
            x = self.apply(x)
            out[i] = x
        return out

    def cycle_length(self, x0: int, limit: int) -> int:
        start = x = int(x0) & mask(self.width)
        for i in range(1, limit + 1):
            x = self.apply(x)
            if x == start:
                return i
        return 0

    def at_width(self, width: int) -> "TMap":
        if width == self.width:
            return self
        if width > self.width:
            raise ValueError(f"{self.name} is only defined on {self.width}-bit words")
        return _Reduced(self, width)


class _Reduced(TMap):
    """``f mod 2**width`` for a map defined at a larger width."""

    def __init__(self, inner: TMap, width: int):
        self.inner = inner
        self.width = width
        self.name = inner.name
        self._m = mask(width)

    def apply(self, x: int) -> int:
        return self.inner.apply(x) & self._m

    def values(self, xs) -> np.ndarray:
        return self.inner.values(xs) & np.uint64(self._m)


class WordMap(TMap):
    """A T-function given by Python callables that take ``(x, width)``.

    ``vfunc(xs, width)`` optionally evaluates a uint64 array at once.
    """

    def __init__(self, func: Callable[[int, int], int], width: int, name: str = "f",
                 vfunc: Callable[[np.ndarray, int], np.ndarray] | None = None):
        self.func = func
        self.vfunc = vfunc
        self.width = width
        self.name = name
        self._m = mask(width)

    def apply(self, x: int) -> int:
        return int(self.func(x, self.width)) & self._m

    def values(self, xs) -> np.ndarray:
        if self.vfunc is None:
            return super().values(xs)
        xs = np.asarray(xs, dtype=np.uint64)
        with np.errstate(over="ignore"):
            return np.asarray(self.vfunc(xs, self.width), dtype=np.uint64) & np.uint64(self._m)

    def at_width(self, width: int) -> "WordMap":
        return WordMap(self.func, width, self.name, self.vfunc)


@dataclass(frozen=True, eq=False)
class TFunction(TMap):
    """An expression bound to a word width."""

    body: Node
    width: int
    name: str = "f"
    kernels: object = field(default=None, repr=False, compare=False)

    @classmethod
    def parse(cls, text: str, width: int, name: str | None = None,
              kernels=None) -> "TFunction":
        return cls(parse(text), width, name or text, kernels)

    @property
    def source(self) -> str:
        return to_text(self.body)

    @cached_property
    def program(self) -> Program:
        return compile_expr(self.body, self.width)

    @property
    def _k(self):
        return self.kernels or _default_kernels

    def _call(self, fn, *args):
        p = self.program
        try:
            return fn(p.ops, p.args, self.width, *args)
        except ParityError as exc:
            raise _translate(p, exc) from None

    def apply(self, x: int) -> int:
        return self._call(self._k.eval_one, x)

    def values(self, xs) -> np.ndarray:
        return self._call(self._k.eval_many, np.asarray(xs, dtype=np.uint64))

    def orbit(self, x0: int, steps: int) -> np.ndarray:
        return self._call(self._k.orbit, int(x0), int(steps))

    def cycle_length(self, x0: int, limit: int) -> int:
        return self._call(self._k.cycle_length, int(x0), int(limit))

    def at_width(self, width: int) -> "TFunction":
        if width == self.width:
            return self
        return TFunction(self.body, width, self.name, self.kernels)

    def with_kernels(self, kernels) -> "TFunction":
        return TFunction(self.body, self.width, self.name, kernels)


def tfunction(text: str, width: int, name: str | None = None) -> TFunction:
    return TFunction.parse(text, width, name)


def evaluate(f: TMap, x: Word) -> Word:
    return f(x)


def iterate(f: TMap, x0: Word | int, steps: int) -> list[Word]:
    """``[x0, f(x0), ..., f^steps(x0)]`` as Words."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    start = x0.value if isinstance(x0, Word) else int(x0)
    return [Word(int(v), f.width) for v in f.orbit(start, steps)]


def iterate_stream(f: TMap, x0: int, steps: int, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
    """Yield ``x_0 .. x_steps`` in consecutive arrays of at most ``chunk`` words."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    n = min(chunk, steps + 1)
    block = f.orbit(int(x0), n - 1)
    yield block
    remaining = steps + 1 - n
    while remaining > 0:
        n = min(chunk, remaining)
        block = f.orbit(int(block[-1]), n)[1:]
        yield block
        remaining -= n


# -------------------------------------------------- explicit constructions


def make_transitive(g: TFunction) -> TFunction:
    """``1 + x + 2*(g(x+1) - g(x))``, a transitive T-function for any T-function g."""
    shifted = substitute(g.body, Binary("add", Var(), Lit(1)))
    body = Binary("add", Binary("add", Lit(1), Var()),
                  Binary("mul", Lit(2), Binary("sub", shifted, g.body)))
    return TFunction(body, g.width, f"transitive({g.name})", g.kernels)


def make_bijective(g: TFunction, c: int) -> TFunction:
    """``c + x + 2*g(x)`` with ``c`` in {0, 1}; bijective for any T-function g."""
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    body = Binary("add", Binary("add", Lit(c), Var()), Binary("mul", Lit(2), g.body))
    return TFunction(body, g.width, f"bijective({g.name}, {c})", g.kernels)
