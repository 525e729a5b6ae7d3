"""Backend selection for the hot kernels.

The compiled Cython module is used when it imports; otherwise (or when
``DISLOCWAVE_BACKEND=python`` is set) the numpy fallback is used.
"""
import os

from dislocwave import _pykernels

BACKEND = "python"
if os.environ.get("DISLOCWAVE_BACKEND", "").lower() != "python":
    try:
        from dislocwave import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

apply_stencil = _impl.apply_stencil
apply_reflected = _impl.apply_reflected
corrected_cumtrapz = _impl.corrected_cumtrapz
integrated_rhs = _impl.integrated_rhs
gauge0_sweep = _impl.gauge0_sweep
midpoints = _pykernels.midpoints


def use_backend(name: str):
    """Switch backend at runtime (``"cython"`` or ``"python"``); for benchmarks and tests."""
    global BACKEND, apply_stencil, apply_reflected, corrected_cumtrapz, integrated_rhs, gauge0_sweep
    if name == "cython":
        from dislocwave import _ckernels as impl
    elif name == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    apply_stencil = impl.apply_stencil
    apply_reflected = impl.apply_reflected
    corrected_cumtrapz = impl.corrected_cumtrapz
    integrated_rhs = impl.integrated_rhs
    gauge0_sweep = impl.gauge0_sweep
