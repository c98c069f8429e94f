"""Kernel selection.

The compiled extension is used when it imports; setting
``CDEM_PURE_PYTHON=1`` forces the fallback.  ``use()`` switches at
runtime, which the tests and the benchmark rely on.
"""
import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _pykernels if (_compiled is None or os.environ.get("CDEM_PURE_PYTHON") == "1") else _compiled


def has_compiled() -> bool:
    return _compiled is not None


def name() -> str:
    return "compiled" if _active is _compiled else "python"


def use(which: str):
    """Select ``"compiled"`` or ``"python"`` kernels; returns the previous name."""
    global _active
    previous = name()
    if which == "compiled":
        if _compiled is None:
            raise RuntimeError("the compiled extension is not available")
        _active = _compiled
    elif which == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {which!r}")
    return previous


def walk(*args):
    return _active.walk(*args)


def ipf_cdem(*args):
    return _active.ipf_cdem(*args)


def ipf_qi(*args):
    return _active.ipf_qi(*args)


def fiber_components(*args):
    return _active.fiber_components(*args)
