"""Pure numpy versions of the compiled kernels.

The cubic term goes through a zero-padded FFT of length >= 3N+1, which is
alias-free for trigonometric polynomials of degree N.
"""
from functools import lru_cache

import numpy as np
from scipy import fft as sfft


@lru_cache(maxsize=64)
def padded_length(n_modes: int) -> int:
    """Transform length for ``n_modes = N + 1`` coefficients."""
    return sfft.next_fast_len(3 * (n_modes - 1) + 1)


def cubic_szego(u):
    u = np.asarray(u, dtype=np.complex128)
    n = u.shape[-1]
    if n == 0:
        return u.copy()
    L = padded_length(n)
    grid = sfft.ifft(u, n=L) * L
    prod = (grid.real**2 + grid.imag**2) * grid
    return sfft.fft(prod)[:n] / L


def _rk4_szego(u, h):
    k1 = -1j * cubic_szego(u)
    k2 = -1j * cubic_szego(u + 0.5 * h * k1)
    k3 = -1j * cubic_szego(u + 0.5 * h * k2)
    k4 = -1j * cubic_szego(u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def strang_steps(u, half_phase, dt, nsteps):
    u = np.array(u, dtype=np.complex128, copy=True)
    if u.size == 0 or nsteps <= 0:
        return u
    full = half_phase * half_phase
    u *= half_phase
    for s in range(nsteps):
        u = _rk4_szego(u, dt)
        if s < nsteps - 1:
            u *= full
    u *= half_phase
    return u


def lawson_steps(u, half_phase, dt, nsteps):
    u = np.array(u, dtype=np.complex128, copy=True)
    p = half_phase
    h = dt
    for _ in range(nsteps):
        k1 = -1j * cubic_szego(u)
        uh = p * u
        k2 = -1j * cubic_szego(p * (u + 0.5 * h * k1))
        k3 = -1j * cubic_szego(uh + 0.5 * h * k2)
        k4 = -1j * cubic_szego(p * (uh + h * k3))
        u = p * (p * (u + (h / 6.0) * k1) + (h / 3.0) * (k2 + k3)) + (h / 6.0) * k4
    return u
