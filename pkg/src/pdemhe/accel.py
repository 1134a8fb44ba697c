"""Backend selection for the hot numeric loops.

Time stepping and window quadrature are implemented twice: once as plain
numpy array code and once as explicit loops compiled with numba. The numba
path is used whenever numba imports cleanly, unless the environment variable
``PDEMHE_NO_NUMBA`` is set to ``1``/``true``/``yes``, in which case the pure
numpy implementations are selected at import time. Both paths compute the
same discrete scheme; they are benchmarked against each other by
``benchmarks/bench_backends.py``.
"""

import os

_DISABLED = os.environ.get("PDEMHE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by PDEMHE_NO_NUMBA")
    from numba import njit  # noqa: F401

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        """No-op stand-in so modules can decorate unconditionally."""
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
