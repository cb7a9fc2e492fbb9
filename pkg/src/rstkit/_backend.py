"""Numeric backend selection for the hot kernels.

Every hot loop in this package ships in two forms: a loop kernel compiled
with numba and a vectorised pure-numpy fallback.  The environment variable
``RSTKIT_BACKEND`` picks the active one:

* ``auto`` (default) -- use numba when it imports, numpy otherwise
* ``numba``          -- require numba; raise at import time if missing
* ``numpy``          -- always use the pure-numpy paths

Both paths compute the same quantities and agree to float64 roundoff
(binary outputs such as attention masks are bit-identical).  See
``benchmarks/bench_backends.py`` for a timing comparison.
"""

import os

BACKEND_ENV = "RSTKIT_BACKEND"

_choice = os.environ.get(BACKEND_ENV, "auto").strip().lower() or "auto"
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"{BACKEND_ENV}={_choice!r} is not one of 'auto', 'numba', 'numpy'"
    )

if _choice == "numpy":
    NUMBA_ENABLED = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        if _choice == "numba":
            raise RuntimeError(
                f"{BACKEND_ENV}=numba but numba is not importable"
            ) from None
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def jit_kernel(py_func):
    """Compile ``py_func`` with numba when available, else return None.

    Callers keep the vectorised numpy fallback alongside and dispatch on
    the return value.  Compilation results are cached on disk, so repeat
    process start-ups skip the JIT cost.
    """
    if not NUMBA_ENABLED:
        return None
    from numba import njit

    return njit(cache=True)(py_func)
