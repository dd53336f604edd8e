"""Named T-functions used by the tests, the acceptance run and the CLI.

``--expr`` on the command line accepts either an expression or one of these
names prefixed with ``@`` (for example ``@klimov_shamir``).
"""
from __future__ import annotations

from .expr import TFunction, tfunction

MONSTER = ("x/3 + (1/3)**x + 4*(1 - 2*~((x & x**2 + x**3) | x**4)"
           "/(3 - 4*(5 + 6*x**5)**(x**6 ^ x**7)))**(7 + 8*x**8/(9 + 10*x**9))")

SUITE: dict[str, str] = {
    "counter": "x + 1",
    "klimov_shamir": "x + (x**2 | 5)",
    "klimov_shamir_7": "x + (x**2 | 7)",
    "poly_1_1_2": "1 + x + 2*x**2",
    "poly_1_3_2": "1 + 3*x + 2*x**2",
    "poly_1_1_4": "1 + x + 4*x**2",
    "poly_quartic": "3 + x + 2*x**2 + 4*x**3 + 2*x**4",
    "exponential": "3*x + 3**x",
    "rational": "1 + x + 4/(1 + 2*x)",
    "monster": MONSTER,
    "add_xor": "((x ^ 0x9E3779B9) + -0x7F4A7C15) ^ 0x6A09E667",
}


def get(name: str, width: int) -> TFunction:
    try:
        text = SUITE[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(sorted(SUITE))}") from None
    return tfunction(text, width, name)


def resolve(text: str, width: int) -> TFunction:
    """An expression, or ``@name`` for a catalog entry."""
    if text.startswith("@"):
        return get(text[1:], width)
    return tfunction(text, width)
