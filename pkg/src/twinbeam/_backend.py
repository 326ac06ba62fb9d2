"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports cleanly; otherwise the
NumPy twins in ``_pycore`` take over. Set ``TWINBEAM_PURE=1`` to force the
fallback (used by the test suite and the benchmark to compare both).
"""
import logging
import os

from . import _pycore

log = logging.getLogger(__name__)

KERNEL_NAMES = (
    "coincidence_all_pairs",
    "coincidence_start_stop",
    "dead_time_mask",
    "bin_counts",
    "pole_product_average",
)


def _load_compiled():
    if os.environ.get("TWINBEAM_PURE", "") not in ("", "0"):
        return None
    try:
        from . import _core
    except ImportError as exc:
        log.debug("compiled core unavailable: %s", exc)
        return None
    return _core


_compiled = _load_compiled()
kernels = _compiled if _compiled is not None else _pycore
NAME = "cython" if _compiled is not None else "numpy"


def get(name=None):
    """Return a kernel module by name ('cython', 'numpy') or the active one."""
    if name is None:
        return kernels
    if name == "numpy":
        return _pycore
    if name == "cython":
        if _compiled is None:
            from . import _core  # raises ImportError with the real reason
            return _core
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["numpy"]
    try:
        get("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names
