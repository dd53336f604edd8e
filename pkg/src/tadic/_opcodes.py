"""Opcodes of the postfix programs executed by the evaluation kernels.

Kept in sync by hand with ``_ckernels.pyx``.
"""
from __future__ import annotations

VAR = 0
LIT = 1
NEG = 2
NOT = 3
ADD = 4
SUB = 5
MUL = 6
DIV = 7
POWLIT = 8  # exponent is a nonnegative literal stored in args
POW = 9  # exponent computed; base must be odd
AND = 10
OR = 11
XOR = 12

NAMES = {
    VAR: "var", LIT: "lit", NEG: "neg", NOT: "not", ADD: "add", SUB: "sub",
    MUL: "mul", DIV: "div", POWLIT: "powlit", POW: "pow", AND: "and", OR: "or",
    XOR: "xor",
}


class ParityError(ArithmeticError):
    """An even divisor or an even base under a computed exponent.

    ``op_index`` points into the program, ``x`` is the input being evaluated
    and ``step`` (orbit kernels only) the index of the iterate fed to it.
    """

    def __init__(self, op_index: int, x: int, step: int | None = None):
        super().__init__(op_index, x, step)
        self.op_index = op_index
        self.x = x
        self.step = step
