"""Kernel backend selection.

Hot kernels are compiled with numba when it is importable. Setting
``QIC_DISABLE_NUMBA=1`` forces the pure-numpy implementations, which
follow the same algorithm step for step.  ``QIC_THREADS`` caps the numba
thread pool (0 or unset means numba's default).
"""
import os

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba

    # probe omp/workqueue before tbb; old tbb builds only produce warnings
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in _FALSY


USE_NUMBA = HAVE_NUMBA and not _flag("QIC_DISABLE_NUMBA")


def configure_threads(value=None):
    """Apply a thread cap; ``value`` defaults to ``$QIC_THREADS``."""
    if value is None:
        raw = os.environ.get("QIC_THREADS", "0").strip() or "0"
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"QIC_THREADS must be an integer, got {raw!r}")
    if value < 0:
        raise ValueError("thread count must be >= 0")
    if USE_NUMBA and value > 0:
        numba.set_num_threads(min(value, numba.config.NUMBA_NUM_THREADS))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
