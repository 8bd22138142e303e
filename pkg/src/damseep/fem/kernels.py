"""Backend selection for the numeric kernels.

The compiled extension is used when it imported cleanly; setting
DAMSEEP_PURE_PYTHON=1 forces the reference implementation. Both expose the
same functions, so callers import names from this module only.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None

if os.environ.get("DAMSEEP_PURE_PYTHON") == "1" or _kernels_cy is None:
    _active = _kernels_py
else:
    _active = _kernels_cy

BACKEND: str = _active.NAME


def available_backends() -> tuple:
    return ("python",) if _kernels_cy is None else ("python", "cython")


def get_backend(name=None):
    """Return a kernel module by name ('python' / 'cython'), default active."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _kernels_cy is None:
            raise ImportError("compiled kernels are not available")
        return _kernels_cy
    raise ValueError(f"unknown backend {name!r}")


element_geometry = _active.element_geometry
unit_stiffness = _active.unit_stiffness
stiffness_data = _active.stiffness_data
kr_curve = _active.kr_curve
head_gradients = _active.head_gradients
linear_solve = _active.linear_solve
