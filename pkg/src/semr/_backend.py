"""Backend switch for the hot simulation kernels.

Set ``SEMR_DISABLE_NUMBA=1`` to force the vectorised numpy path even when numba
is importable.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

NUMBA_AVAILABLE = numba is not None
NUMBA_DISABLED = os.environ.get("SEMR_DISABLE_NUMBA", "").strip().lower() not in _FALSY
USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def njit(fn):
    """``numba.njit(cache=True, nogil=True)`` when numba is usable, else identity."""
    if not NUMBA_AVAILABLE:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def resolve(backend=None) -> str:
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
