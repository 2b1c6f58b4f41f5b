"""Backend selection for the hot loops.

The compiled extension (``szego_lab._kernels``) evaluates the cubic term by
direct O(N^2) convolution, which beats the padded FFT for small truncations.
For large N the FFT path is asymptotically cheaper, so both the compiled and
the pure-Python backend hand over to it above ``DIRECT_MAX_MODES``.

Set ``SZEGO_LAB_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("SZEGO_LAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

# crossover measured by benchmarks/bench_kernels.py
DIRECT_MAX_MODES = 97


def _use_direct(n_modes):
    return _compiled is not None and n_modes <= DIRECT_MAX_MODES


def cubic_szego(u):
    """Exact coefficients of P_N Pi(|u|^2 u) on modes 0..N."""
    if _use_direct(len(u)):
        return _compiled.cubic_szego(u)
    return _fallback.cubic_szego(u)


def strang_steps(u, half_phase, dt, nsteps):
    """``nsteps`` Strang steps with RK4 nonlinear substeps."""
    if _use_direct(len(u)):
        return _compiled.strang_steps(u, half_phase, float(dt), int(nsteps))
    return _fallback.strang_steps(u, half_phase, dt, nsteps)


def lawson_steps(u, half_phase, dt, nsteps):
    """``nsteps`` integrating-factor RK4 steps (exact linear part)."""
    if _use_direct(len(u)):
        return _compiled.lawson_steps(u, half_phase, float(dt), int(nsteps))
    return _fallback.lawson_steps(u, half_phase, dt, nsteps)
