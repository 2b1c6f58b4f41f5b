"""Closed-form cubic Szegő solution issued from e^{ix} + delta.

V(t,x) = (a(t) e^{ix} + b(t)) / (1 - p(t) e^{ix}), so the Fourier coefficients
are c_0 = b and c_k = p^{k-1} (a + b p) for k >= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceError
from .spectral import SzegoField

NORM_RTOL = 1e-12
MAX_TERMS = 50_000_000


@dataclass(frozen=True)
class OracleState:
    a: complex
    b: complex
    p: complex
    omega: float
    delta: float
    t: float

    @property
    def lead(self) -> complex:
        """a + b p, the common factor of every positive mode."""
        return self.a + self.b * self.p


def _check_delta(delta):
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0, 1)")


def omega(delta: float) -> float:
    return delta * math.sqrt(1 + delta * delta / 4)


def t_delta(delta: float) -> float:
    """First time with omega t = pi/2."""
    _check_delta(delta)
    return math.pi / (delta * math.sqrt(4 + delta * delta))


def oracle_state(delta: float, t: float) -> OracleState:
    _check_delta(delta)
    w = omega(delta)
    d2 = delta * delta
    s, c = math.sin(w * t), math.cos(w * t)
    a = complex(np.exp(-1j * t * (1 + d2)))
    b = complex(np.exp(-1j * t * (1 + d2 / 2)) * (delta * c - 1j * ((2 + d2) / math.sqrt(4 + d2)) * s))
    p = complex(-(2j / math.sqrt(4 + d2)) * s * np.exp(-1j * t * d2 / 2))
    return OracleState(a, b, p, w, delta, t)


def oracle_coeffs(delta: float, t: float, N: int) -> np.ndarray:
    st = oracle_state(delta, t)
    c = np.empty(N + 1, dtype=np.complex128)
    c[0] = st.b
    if N >= 1:
        c[1:] = st.lead * st.p ** np.arange(N)
    return c


@dataclass(frozen=True)
class OracleField:
    field: SzegoField
    tail_h1: float  # H^1 norm of the discarded modes k > N


def oracle_field(delta: float, t: float, N: int) -> OracleField:
    """Truncated coefficients together with the H^1 size of the dropped tail."""
    if N < 1:
        raise ContractError("N must be >= 1")
    st = oracle_state(delta, t)
    c = oracle_coeffs(delta, t, N)
    tail = _tail_sum(st, 1.0, N + 1)
    return OracleField(SzegoField(c), math.sqrt(tail))


def _tail_sum(st: OracleState, s: float, K0: int, homogeneous=False) -> float:
    """sum_{k >= K0} w_k |c_k|^2 for the positive modes, summed until the geometric bound is negligible."""
    r = abs(st.p) ** 2
    L = abs(st.lead) ** 2
    if L == 0:
        return 0.0
    if r == 0:
        if K0 <= 1:
            return (1.0 if homogeneous else 2.0**s) * L
        return 0.0
    total = 0.0
    k = max(K0, 1)
    block = 4096
    while True:
        ks = np.arange(k, k + block, dtype=float)
        w = ks ** (2 * s) if homogeneous else (1 + ks * ks) ** s
        terms = w * L * r ** (ks - 1)
        total += float(np.sum(terms))
        k += block
        K = k
        wK = K ** (2 * s) if homogeneous else (1 + K * K) ** s
        # tail bound with the ratio of consecutive terms frozen at the current point
        ratio = r * (((K + 1) / K) ** (2 * s) if s > 0 else 1.0)
        if ratio < 1:
            bound = wK * L * r ** (K - 1) / (1 - ratio)
            if bound <= NORM_RTOL * max(total, 1e-300):
                return total
        if k > MAX_TERMS:
            raise ConvergenceError(f"H^{s} series did not converge within {MAX_TERMS} terms")


def oracle_hs_norm(delta: float, t: float, s: float, homogeneous: bool = False) -> float:
    """H^s (or homogeneous) norm of the untruncated solution at time t."""
    st = oracle_state(delta, t)
    zero_mode = 0.0 if homogeneous else abs(st.b) ** 2
    return math.sqrt(zero_mode + _tail_sum(st, s, 1, homogeneous))
