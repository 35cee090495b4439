"""Backend selection for the time-march kernels.

The compiled Cython backend is used when its extension module imported
successfully; otherwise the pure numpy backend takes over.  Both produce
bit-identical results (enforced by tests), so the choice only affects
speed.  Set SDWAVE_BACKEND=pure or SDWAVE_BACKEND=cython to force one.
"""

from __future__ import annotations

import importlib
import os

from . import pure

_kernels = None
_requested = os.environ.get("SDWAVE_BACKEND", "").strip().lower()
if _requested not in ("", "pure", "cython"):
    raise ImportError(f"SDWAVE_BACKEND must be 'pure' or 'cython', got {_requested!r}")
if _requested != "pure":
    try:
        _kernels = importlib.import_module("._kernels", __name__)
    except ImportError:
        _kernels = None
        if _requested == "cython":
            raise

_BACKENDS = {"pure": pure}
if _kernels is not None:
    _kernels.NAME = "cython"
    _BACKENDS["cython"] = _kernels

_active = "cython" if "cython" in _BACKENDS else "pure"


def active_backend() -> str:
    """Name of the backend used by default in this process."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str | None = None):
    """Backend module providing aee_march and lie_march."""
    if name is None:
        name = _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available; have {available_backends()}"
        ) from None
