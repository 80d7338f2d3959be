"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise, or when the
environment variable ``TRUTHDISC_PURE_PYTHON`` is set to a non-empty value,
the pure-Python fallback is used.
"""

from __future__ import annotations

import importlib
import os

from . import _pykernels


def load_backend(name: str):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("truthdisc._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        load_backend("cython")
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


if os.environ.get("TRUTHDISC_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        _impl = load_backend("cython")
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

ltm_sweep = _impl.ltm_sweep
depen_confidence = _impl.depen_confidence
pair_counts = _impl.pair_counts
