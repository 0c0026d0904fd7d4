"""Backend selection for the hot simulation kernels.

``HAPLOMW_BACKEND`` picks the implementation: ``numba`` (JIT-compiled loops,
the default when numba imports cleanly), ``numpy`` (pure-numpy fallback), or
``auto``. The choice is resolved when ``haplomw._kernels`` is imported, so set
the variable before importing the package.

``HAPLOMW_WORKERS`` sets the default worker count for sweeps.
"""

from __future__ import annotations

import os

ENV_BACKEND = "HAPLOMW_BACKEND"
ENV_WORKERS = "HAPLOMW_WORKERS"


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def backend_name() -> str:
    raw = os.environ.get(ENV_BACKEND, "auto").strip().lower()
    if raw in ("", "auto"):
        return "numba" if numba_available() else "numpy"
    if raw == "numpy":
        return "numpy"
    if raw == "numba":
        if not numba_available():
            raise RuntimeError(f"{ENV_BACKEND}=numba but numba is not importable")
        return "numba"
    raise ValueError(f"unknown {ENV_BACKEND}={raw!r} (expected auto, numba, or numpy)")


def use_numba() -> bool:
    return backend_name() == "numba"


def default_workers() -> int:
    raw = os.environ.get(ENV_WORKERS, "").strip()
    if not raw:
        return 1
    workers = int(raw)
    return max(workers, 1)
