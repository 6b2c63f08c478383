"""Kernel lane selection: compiled extension when available, else pure Python.

The two lanes implement identical algorithms with identical operation order
and produce bit-equal results; the compiled one is just fast.  Selection
order: the ``QBHEAT_BACKEND`` environment variable (``compiled`` /
``python`` / ``auto``), then availability of the extension.
"""

import os

from . import _kernels_py

try:
    from . import _core as _kernels_c
except ImportError:
    _kernels_c = None


def _initial():
    choice = os.environ.get("QBHEAT_BACKEND", "auto").strip().lower()
    if choice == "python":
        return _kernels_py
    if choice == "compiled":
        if _kernels_c is None:
            raise ImportError(
                "QBHEAT_BACKEND=compiled but the qbheat._core extension "
                "is not built")
        return _kernels_c
    return _kernels_c if _kernels_c is not None else _kernels_py


_active = _initial()


def kernels():
    """The active kernel module."""
    return _active


def backend_name() -> str:
    return _active.name


def available_backends():
    names = ["python"]
    if _kernels_c is not None:
        names.insert(0, "compiled")
    return tuple(names)


def set_backend(name: str):
    """Switch lanes at runtime (used by tests and benchmarks)."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if _kernels_c is None:
            raise ValueError("compiled kernels are not available")
        _active = _kernels_c
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active
