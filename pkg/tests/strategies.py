"""Hypothesis strategies shared by the test modules."""
from hypothesis import strategies as st

from tadic.expr import BINARY_OPS, Binary, Lit, Unary, Var

leaves = st.one_of(st.just(Var()), st.integers(0, 2**70).map(Lit),
                   st.integers(0, 20).map(Lit))


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(["neg", "not"]), children).map(lambda t: Unary(*t)),
        st.tuples(st.sampled_from(BINARY_OPS), children, children).map(lambda t: Binary(*t)),
    )


asts = st.recursive(leaves, _extend, max_leaves=12)
