"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``TADIC_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load_c() -> ModuleType | None:
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_c = _load_c()


def available() -> list[str]:
    return ["python"] + (["cython"] if _c is not None else [])


def get(name: str | None = None) -> ModuleType:
    if name is None:
        if _c is not None and not os.environ.get("TADIC_PURE_PYTHON"):
            return _c
        return _pykernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if _c is None:
            raise ImportError("tadic._ckernels is not built")
        return _c
    raise ValueError(f"unknown backend {name!r}")


kernels = get()
BACKEND = kernels.NAME
