"""Array kernel dispatch: compiled extension when available, numpy otherwise.

The active backend is chosen once at import (set ``TWINGRAPH_PURE_PYTHON=1``
to skip the compiled extension) and can be switched at runtime with
:func:`use`, which the benchmark and the equivalence tests rely on.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import numpy_backend

_KERNEL_NAMES = (
    "gather_rows",
    "scatter_add_rows",
    "triple_concat",
    "triple_concat_backward",
    "leaky_forward",
    "leaky_backward",
    "segment_softmax",
    "segment_softmax_backward",
    "segment_sum",
    "segment_expand",
    "scale_rows",
    "rows_dot",
)

_BACKENDS: dict[str, ModuleType] = {"numpy": numpy_backend}

if not os.environ.get("TWINGRAPH_PURE_PYTHON"):
    try:
        from . import _speedups  # type: ignore[attr-defined]

        _BACKENDS["compiled"] = _speedups
    except ImportError:
        pass

_active: ModuleType = _BACKENDS.get("compiled", numpy_backend)


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active.NAME


def use(name: str) -> str:
    """Switch the active backend; returns the previously active name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    previous = _active.NAME
    _active = _BACKENDS[name]
    return previous


def __getattr__(name: str):
    if name in _KERNEL_NAMES:
        return getattr(_active, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = ["available_backends", "active_backend", "use", *_KERNEL_NAMES]
