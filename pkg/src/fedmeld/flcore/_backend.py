"""Kernel backend selection.

The FEDMELD_BACKEND environment variable picks the implementation:
``numpy`` (always available), ``numba`` (requires the optional extra), or
``auto`` (numba when installed, numpy otherwise; the default).  Tests and
benchmarks may override programmatically with :func:`set_backend`.
"""

from __future__ import annotations

import os

from ..errors import InvalidConfigError
from . import _kernels_numpy

try:
    from . import _kernels_numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    _kernels_numba = None
    HAVE_NUMBA = False

_forced: str | None = None


def set_backend(name: str | None) -> None:
    """Force a backend (``numpy``/``numba``) or restore env-based selection."""
    global _forced
    if name is not None and name not in ("numpy", "numba", "auto"):
        raise InvalidConfigError(f"unknown backend {name!r}")
    _forced = name


def active_backend() -> str:
    choice = _forced or os.environ.get("FEDMELD_BACKEND", "auto").lower()
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba" and not HAVE_NUMBA:
        raise InvalidConfigError("FEDMELD_BACKEND=numba but numba is not installed")
    if choice not in ("numpy", "numba"):
        raise InvalidConfigError(f"unknown FEDMELD_BACKEND value {choice!r}")
    return choice


def kernels():
    return _kernels_numba if active_backend() == "numba" else _kernels_numpy
