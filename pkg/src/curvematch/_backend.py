"""Kernel backend selection: compiled core if available, NumPy otherwise.

Set CURVEMATCH_BACKEND=python or CURVEMATCH_BACKEND=compiled to force one;
forcing the compiled backend raises if the extension is missing.
"""

import os

from . import _kernels_py


def _load():
    choice = os.environ.get("CURVEMATCH_BACKEND", "").strip().lower()
    if choice == "python":
        return _kernels_py
    try:
        from . import _core

        return _core
    except ImportError:
        if choice == "compiled":
            raise
        return _kernels_py


backend = _load()


def get_backend():
    return backend
