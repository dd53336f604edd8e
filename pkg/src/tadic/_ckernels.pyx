# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels; same API as ``_pykernels``.

All arithmetic is on uint64 and relies on C unsigned wrap-around, which is
exactly reduction modulo 2**64; results are then masked to the word width.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int32_t
from libc.stdlib cimport malloc, free

from ._opcodes import ParityError

cnp.import_array()

NAME = "cython"

cdef enum:
    VAR = 0
    LIT = 1
    NEG = 2
    NOT = 3
    ADD = 4
    SUB = 5
    MUL = 6
    DIV = 7
    POWLIT = 8
    POW = 9
    AND = 10
    OR = 11
    XOR = 12


cdef inline uint64_t _inv(uint64_t a) noexcept nogil:
    cdef uint64_t x = a
    cdef int k
    for k in range(6):
        x = x * (2 - a * x)
    return x


cdef inline uint64_t _pow(uint64_t b, uint64_t e) noexcept nogil:
    cdef uint64_t r = 1
    while e:
        if e & 1:
            r = r * b
        b = b * b
        e >>= 1
    return r


cdef uint64_t _run(const int32_t* ops, const uint64_t* args, Py_ssize_t n,
                   uint64_t m, uint64_t em, uint64_t x, uint64_t* st,
                   Py_ssize_t* err) noexcept nogil:
    cdef Py_ssize_t i, sp = 0
    cdef uint64_t a, b
    cdef int32_t op
    for i in range(n):
        op = ops[i]
        if op == VAR:
            st[sp] = x
            sp += 1
        elif op == LIT:
            st[sp] = args[i]
            sp += 1
        elif op == NEG:
            st[sp - 1] = (0 - st[sp - 1]) & m
        elif op == NOT:
            st[sp - 1] = (~st[sp - 1]) & m
        elif op == POWLIT:
            st[sp - 1] = _pow(st[sp - 1], args[i]) & m
        else:
            sp -= 1
            b = st[sp]
            a = st[sp - 1]
            if op == ADD:
                a = (a + b) & m
            elif op == SUB:
                a = (a - b) & m
            elif op == MUL:
                a = (a * b) & m
            elif op == AND:
                a = a & b
            elif op == OR:
                a = a | b
            elif op == XOR:
                a = a ^ b
            elif op == DIV:
                if not (b & 1):
                    err[0] = i
                    return 0
                a = (a * _inv(b)) & m
            elif op == POW:
                if not (a & 1):
                    err[0] = i
                    return 0
                a = _pow(a, b & em) & m
            st[sp - 1] = a
    return st[0]


cdef class _Prog:
    cdef int32_t[::1] ops
    cdef uint64_t[::1] args
    cdef Py_ssize_t n
    cdef uint64_t m, em
    cdef uint64_t* st

    def __cinit__(self, ops, args, int width):
        self.ops = np.ascontiguousarray(ops, dtype=np.int32)
        self.args = np.ascontiguousarray(args, dtype=np.uint64)
        self.n = self.ops.shape[0]
        if width == 64:
            self.m = <uint64_t>0xFFFFFFFFFFFFFFFF
        else:
            self.m = ((<uint64_t>1) << width) - 1
        self.em = ((<uint64_t>1) << (width - 1)) - 1
        self.st = <uint64_t*>malloc((self.n + 1) * sizeof(uint64_t))
        if self.st == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.st)


def eval_one(ops, args, int width, x):
    cdef _Prog p = _Prog(ops, args, width)
    cdef Py_ssize_t err = -1
    cdef uint64_t xv = (<uint64_t>int(x)) & p.m
    cdef uint64_t r = _run(&p.ops[0], &p.args[0], p.n, p.m, p.em, xv, p.st, &err)
    if err >= 0:
        raise ParityError(err, int(xv))
    return int(r)


def orbit(ops, args, int width, x0, Py_ssize_t steps):
    cdef _Prog p = _Prog(ops, args, width)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(steps + 1, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i, err = -1
    cdef uint64_t x = (<uint64_t>int(x0)) & p.m
    o[0] = x
    with nogil:
        for i in range(1, steps + 1):
            x = _run(&p.ops[0], &p.args[0], p.n, p.m, p.em, x, p.st, &err)
            if err >= 0:
                break
            o[i] = x
    if err >= 0:
        raise ParityError(err, int(o[i - 1]), i - 1)
    return out


def cycle_length(ops, args, int width, x0, Py_ssize_t limit):
    cdef _Prog p = _Prog(ops, args, width)
    cdef Py_ssize_t i, err = -1, found = 0
    cdef uint64_t start = (<uint64_t>int(x0)) & p.m
    cdef uint64_t x = start, prev = start
    with nogil:
        for i in range(1, limit + 1):
            prev = x
            x = _run(&p.ops[0], &p.args[0], p.n, p.m, p.em, x, p.st, &err)
            if err >= 0:
                break
            if x == start:
                found = i
                break
    if err >= 0:
        raise ParityError(err, int(prev))
    return int(found)


def eval_many(ops, args, int width, xs):
    cdef _Prog p = _Prog(ops, args, width)
    cdef uint64_t[::1] src = np.ascontiguousarray(xs, dtype=np.uint64)
    cdef Py_ssize_t size = src.shape[0]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(size, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i, err = -1
    if size == 0:
        return out
    with nogil:
        for i in range(size):
            o[i] = _run(&p.ops[0], &p.args[0], p.n, p.m, p.em, src[i] & p.m, p.st, &err)
            if err >= 0:
                break
    if err >= 0:
        raise ParityError(err, int(src[i] & p.m))
    return out
