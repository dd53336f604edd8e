"""The compiled and pure-Python kernels agree with the tree walker."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tadic import _backend
from tadic.catalog import SUITE
from tadic.expr import EvaluationError, TFunction, evaluate_tree
from tadic.word import Word

from strategies import asts


def _walk(tree, x, width):
    try:
        return evaluate_tree(tree, Word(x, width)).value
    except EvaluationError as exc:
        return type(exc)


def _run(f, x):
    try:
        return f(x)
    except EvaluationError as exc:
        return type(exc)


@given(asts, st.integers(1, 64), st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=6))
def test_random_expressions_agree(tree, width, xs):
    for name in _backend.available():
        f = TFunction(tree, width, kernels=_backend.get(name))
        for x in xs:
            x &= (1 << width) - 1
            assert _run(f, x) == _walk(tree, x, width)


@pytest.mark.parametrize("name", sorted(SUITE))
@pytest.mark.parametrize("width", [1, 2, 5, 8, 13, 32, 63, 64])
def test_suite_agrees_across_backends(kernels, name, width):
    f = TFunction.parse(SUITE[name], width, kernels=kernels)
    xs = np.random.default_rng(width).integers(0, 2**63, size=64, dtype=np.uint64)
    xs = xs * np.uint64(2) + np.uint64(1) & np.uint64((1 << width) - 1)
    vals = f.values(xs)
    ref = [evaluate_tree(f.body, Word(int(x), width)).value for x in xs]
    assert vals.tolist() == ref
    assert [f.apply(int(x)) for x in xs[:8]] == ref[:8]


def test_orbit_and_cycle_length(kernels):
    f = TFunction.parse("x + (x**2 | 5)", 8, kernels=kernels)
    orbit = f.orbit(0, 16)
    assert orbit[:3].tolist() == [0, 5, 34]
    assert f.cycle_length(0, 1000) == 256
    assert f.cycle_length(0, 100) == 0
    g = TFunction.parse("x", 8, kernels=kernels)
    assert g.cycle_length(9, 5) == 1


def test_parity_error_positions(kernels):
    f = TFunction.parse("x + 1 + 2/(x - 3)", 8, kernels=kernels)
    with pytest.raises(EvaluationError) as info:
        f.orbit(0, 20)
    # x0 = 0 gives an odd x1, and x1 - 3 is even
    x1 = evaluate_tree(f.body, Word(0, 8)).value
    assert (info.value.step, info.value.x) == (1, x1)
    with pytest.raises(EvaluationError):
        f.values(np.array([2, 4, 5], dtype=np.uint64))


def test_backend_selection(monkeypatch):
    assert "python" in _backend.available()
    assert _backend.get("python").NAME == "python"
    with pytest.raises(ValueError):
        _backend.get("fortran")
