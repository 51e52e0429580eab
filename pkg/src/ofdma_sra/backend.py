"""Numeric-kernel backend selection.

The hot inner loops (per-combination power root finds and expected-utility
sums over SNR atoms) exist in two functionally identical implementations:

* ``"numba"`` -- scalar loops compiled with ``numba.njit`` (default when
  numba imports cleanly),
* ``"numpy"`` -- vectorized pure-numpy fallback.

The backend is picked from the ``OFDMA_SRA_BACKEND`` environment variable
(``numba`` or ``numpy``); ``set_backend`` overrides it at runtime, which the
test suite and the benchmark script use to compare both paths.
"""

from __future__ import annotations

import os

ENV_VAR = "OFDMA_SRA_BACKEND"

_VALID = ("numba", "numpy")
_override: str | None = None

try:
    import numba  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False


def available_backends() -> tuple[str, ...]:
    return _VALID if _HAVE_NUMBA else ("numpy",)


def active_backend() -> str:
    """Resolve the backend name currently in effect."""
    name = _override or os.environ.get(ENV_VAR, "").strip().lower()
    if not name:
        name = "numba" if _HAVE_NUMBA else "numpy"
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}; expected one of {_VALID}")
    if name == "numba" and not _HAVE_NUMBA:
        name = "numpy"
    return name


def set_backend(name: str | None) -> None:
    """Force a backend (``None`` restores env-var/default resolution)."""
    global _override
    if name is not None:
        name = name.strip().lower()
        if name not in _VALID:
            raise ValueError(f"unknown backend {name!r}; expected one of {_VALID}")
        if name == "numba" and not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
    _override = name
