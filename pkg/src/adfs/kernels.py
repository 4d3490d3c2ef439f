"""Propagation kernel selection.

The compiled extension is picked up when importable; setting the
environment variable ADFS_FORCE_FALLBACK to a truthy value before import
pins the numpy implementation instead.  Both share one contract:
operator samples on a half-step grid, density matrix advanced by
(len(a_half)-1)//2 RK4 steps.
"""

import os

import numpy as np

from . import _kernel_fallback

_FORCE_FALLBACK = os.environ.get("ADFS_FORCE_FALLBACK", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)

_core = None
if not _FORCE_FALLBACK:
    try:
        from . import _core as _core  # type: ignore[no-redef]
    except ImportError:
        _core = None

USE_COMPILED = _core is not None
KERNEL_NAME = "compiled" if USE_COMPILED else "fallback"


def _conform(a_half, f_half, rho):
    a_half = np.ascontiguousarray(a_half, dtype=np.complex128)
    f_half = np.ascontiguousarray(f_half, dtype=np.complex128)
    rho = np.array(rho, dtype=np.complex128, order="C")
    if a_half.ndim != 3 or f_half.ndim != 4 or rho.ndim != 2:
        raise ValueError("expected a_half (s,n,n), f_half (m,s,n,n), rho (n,n)")
    return a_half, f_half, rho


def rk4_advance(a_half, f_half, rho, dt):
    """Advance rho through the sampled interval; returns a new array."""
    a_half, f_half, rho = _conform(a_half, f_half, rho)
    if USE_COMPILED:
        _core.rk4_advance(a_half, f_half, rho, float(dt))
        return rho
    return _kernel_fallback.rk4_advance(a_half, f_half, rho, float(dt))


def rk4_advance_fallback(a_half, f_half, rho, dt):
    """Numpy path regardless of selection; used by benchmarks and tests."""
    a_half, f_half, rho = _conform(a_half, f_half, rho)
    return _kernel_fallback.rk4_advance(a_half, f_half, rho, float(dt))


def rk4_advance_compiled(a_half, f_half, rho, dt):
    """Compiled path or None when the extension is unavailable."""
    if _core is None:
        return None
    a_half, f_half, rho = _conform(a_half, f_half, rho)
    _core.rk4_advance(a_half, f_half, rho, float(dt))
    return rho
