"""Backend dispatch for the per-pixel inner loops.

The compiled numba path is used by default. Setting the environment variable
``PLANESTEREO_NO_NUMBA=1`` (or calling :func:`set_backend`) switches every
kernel to the pure NumPy implementation. Both paths produce identical output.
"""

import os

from ._common import CENSUS_BITS, CENSUS_INVALID, CIRCLE_DU, CIRCLE_DV

KERNELS = (
    "census_transform",
    "fast_score",
    "match_candidates",
    "rasterize",
    "interpolate_planes",
    "evaluate_costs",
    "refine",
    "wta_search",
)

BACKEND = None


def _load(name):
    if name == "numba":
        from . import _jit as mod
    elif name == "numpy":
        from . import _numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    return mod


def available_backends():
    names = ["numpy"]
    try:
        import numba  # noqa: F401
    except ImportError:
        return names
    return ["numba"] + names


def set_backend(name):
    """Rebind all kernels in this module to backend ``name``; returns the previous one."""
    global BACKEND
    mod = _load(name)
    for k in KERNELS:
        globals()[k] = getattr(mod, k)
    previous, BACKEND = BACKEND, name
    return previous


def get_backend(name):
    """Module object holding backend ``name`` without switching the global choice."""
    return _load(name)


def _default_backend():
    if os.environ.get("PLANESTEREO_NO_NUMBA", "").strip() not in ("", "0"):
        return "numpy"
    return "numba" if "numba" in available_backends() else "numpy"


set_backend(_default_backend())

__all__ = [
    "BACKEND",
    "CENSUS_BITS",
    "CENSUS_INVALID",
    "CIRCLE_DU",
    "CIRCLE_DV",
    "available_backends",
    "get_backend",
    "set_backend",
    *KERNELS,
]
