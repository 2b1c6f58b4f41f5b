"""Positive-frequency fields on the circle and the operations acting on them.

A field ``u = sum_{k=0}^N u_k e^{ikx}`` is stored as its coefficient vector.
All integrals use the normalised measure dx/2pi, so ||e_m||_{L^2} = 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
from scipy import fft as sfft

from . import kernels
from .errors import ContractError, PreconditionError


def _frozen(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SzegoField:
    """Coefficients u_0..u_N of a truncated element of L^2_+."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(np.atleast_1d(self.coeffs))
        if c.ndim != 1:
            raise ContractError("coefficients must be one-dimensional")
        if c.size < 2:
            raise ContractError("truncation degree N must be >= 1")
        if not np.all(np.isfinite(c)):
            raise ContractError("field has non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, SzegoField):
            return NotImplemented
        return self.N == other.N and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.N, self.coeffs.tobytes()))

    def __repr__(self):
        return f"SzegoField(N={self.N}, coeffs={np.array2string(self.coeffs, threshold=8)})"

    @classmethod
    def zeros(cls, N):
        return cls(np.zeros(N + 1, dtype=np.complex128))

    @classmethod
    def plane_wave(cls, m, N, c=1.0):
        if not 0 <= m <= N:
            raise ContractError(f"mode {m} outside 0..{N}")
        a = np.zeros(N + 1, dtype=np.complex128)
        a[m] = c
        return cls(a)

    def with_coeffs(self, coeffs):
        return SzegoField(coeffs)

    def resized(self, N):
        """Zero-pad or truncate to degree N."""
        out = np.zeros(N + 1, dtype=np.complex128)
        n = min(N, self.N) + 1
        out[:n] = self.coeffs[:n]
        return SzegoField(out)

    def __add__(self, other):
        return SzegoField(self.coeffs + as_coeffs(other, self.N))

    def __sub__(self, other):
        return SzegoField(self.coeffs - as_coeffs(other, self.N))

    def __mul__(self, scalar):
        return SzegoField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SzegoField(-self.coeffs)


@dataclass(frozen=True, eq=False)
class BilateralSeries:
    """Coefficients c_{-N}..c_N; ``coeffs[N + k]`` is c_k."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(np.atleast_1d(self.coeffs))
        if c.ndim != 1 or c.size % 2 == 0:
            raise ContractError("bilateral series needs an odd number of coefficients")
        if not np.all(np.isfinite(c)):
            raise ContractError("series has non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    def __getitem__(self, k):
        if abs(k) > self.N:
            return 0j
        return complex(self.coeffs[self.N + k])

    @classmethod
    def from_dict(cls, d):
        N = max(1, max((abs(k) for k in d), default=0))
        a = np.zeros(2 * N + 1, dtype=np.complex128)
        for k, v in d.items():
            a[N + k] = v
        return cls(a)


FieldLike = Union[SzegoField, np.ndarray, list]


def as_coeffs(u, N=None) -> np.ndarray:
    if isinstance(u, SzegoField):
        c = u.coeffs
    else:
        c = np.asarray(u, dtype=np.complex128)
    if N is not None and c.size != N + 1:
        raise ContractError(f"expected {N + 1} coefficients, got {c.size}")
    return c


def project_szego(s: BilateralSeries) -> SzegoField:
    """Keep the nonnegative modes of a bilateral series."""
    return SzegoField(s.coeffs[s.N:])


def embed(u: SzegoField) -> BilateralSeries:
    """Inverse of projection on L^2_+: pad negative modes with zeros."""
    c = as_coeffs(u)
    return BilateralSeries(np.concatenate([np.zeros(c.size - 1, dtype=np.complex128), c]))


def _weights(N, s, homogeneous=False):
    k = np.arange(N + 1, dtype=float)
    if homogeneous:
        if s == 0:
            return np.ones_like(k)
        return k ** (2.0 * s)
    return (1.0 + k * k) ** s


def sobolev_norm(u: FieldLike, s: float) -> float:
    """(sum_k (1+k^2)^s |u_k|^2)^{1/2}."""
    if not np.isfinite(s):
        raise ContractError("Sobolev index must be finite")
    c = as_coeffs(u)
    return float(np.sqrt(np.sum(_weights(c.size - 1, s) * np.abs(c) ** 2)))


def hs_dot_norm(u: FieldLike, s: float) -> float:
    """Homogeneous norm with weight k^{2s}; hs_dot_norm(u, 1/2)^2 = I(u)."""
    if not np.isfinite(s):
        raise ContractError("Sobolev index must be finite")
    c = as_coeffs(u)
    return float(np.sqrt(np.sum(_weights(c.size - 1, s, homogeneous=True) * np.abs(c) ** 2)))


def cubic_nonlinearity(u: FieldLike) -> SzegoField:
    """Alias-free coefficients of P_N Pi(|u|^2 u)."""
    return SzegoField(kernels.cubic_szego(as_coeffs(u)))


def grid_values(u: FieldLike, grid: int) -> np.ndarray:
    """u evaluated at x_j = 2 pi j / grid."""
    c = as_coeffs(u)
    if grid < c.size:
        raise PreconditionError("grid smaller than the number of modes")
    return sfft.ifft(c, n=grid) * grid


def l4_norm4(u: FieldLike, grid: int | None = None) -> float:
    c = as_coeffs(u)
    N = c.size - 1
    if grid is None:
        grid = 3 * N + 1
    if grid < 3 * N + 1:
        raise PreconditionError(f"L^4 quadrature needs grid >= 3N+1 = {3 * N + 1}, got {grid}")
    # |u|^4 has degree <= 2N in each direction; mean over >= 2N+1 points is exact
    g = grid_values(c, grid)
    return float(np.mean((g.real**2 + g.imag**2) ** 2))


class Conserved(NamedTuple):
    Q: float
    I: float
    E: float


def conserved_quantities(u: FieldLike, epsilon: float = 1.0, alpha: float = 0.0,
                         grid: int | None = None, dispersion: float | None = None) -> Conserved:
    """Mass, momentum and energy; ``dispersion`` overrides epsilon**alpha."""
    c = as_coeffs(u)
    k = np.arange(c.size, dtype=float)
    w = np.abs(c) ** 2
    D = epsilon**alpha if dispersion is None else dispersion
    Q = float(np.sum(w))
    I = float(np.sum(k * w))
    E = 0.5 * D * float(np.sum(k * k * w)) + 0.25 * l4_norm4(c, grid)
    return Conserved(Q, I, E)


def hankel_matrix(V: FieldLike, M: int | None = None) -> np.ndarray:
    """Gamma_{n,k} = V_{n+k}, 0 <= n,k <= M."""
    c = as_coeffs(V)
    N = c.size - 1
    if M is None:
        M = N
    padded = np.zeros(2 * M + 1, dtype=np.complex128)
    n = min(N, 2 * M) + 1
    padded[:n] = c[:n]
    idx = np.add.outer(np.arange(M + 1), np.arange(M + 1))
    return padded[idx]


def toeplitz_abs2(V: FieldLike, M: int | None = None) -> np.ndarray:
    """Matrix of T_{|V|^2} on modes 0..M: entry (n,k) is the (n-k)-th coefficient of |V|^2."""
    c = as_coeffs(V)
    N = c.size - 1
    if M is None:
        M = N
    # b_d = sum_j V_{j+d} conj(V_j)
    full = np.correlate(c, c, mode="full")  # index N + d holds b_d
    b = np.zeros(2 * M + 1, dtype=np.complex128)
    for d in range(-min(N, M), min(N, M) + 1):
        b[M + d] = full[N + d]
    idx = np.subtract.outer(np.arange(M + 1), np.arange(M + 1))
    return b[M + idx]


def hankel_nuclear_norm(V: FieldLike, M: int | None = None) -> float:
    """Tr|H_V| for the truncated field, as the sum of singular values of Gamma."""
    c = as_coeffs(V)
    N = c.size - 1
    if M is None:
        M = N
    if M < N:
        raise PreconditionError(f"M={M} must be >= N={N}")
    # entries with n+k > N vanish, so the (N+1)x(N+1) block carries every singular value
    G = hankel_matrix(c, N)
    if not np.any(G):
        return 0.0
    return float(np.sum(np.linalg.svd(G, compute_uv=False)))


# ---- field JSON format: array of [re, im] pairs indexed from k = 0 ----

def field_to_json(u: FieldLike) -> list:
    return [[float(z.real), float(z.imag)] for z in as_coeffs(u)]


def field_from_json(data) -> SzegoField:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ContractError(f"malformed field data: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ContractError("field JSON must be an array of [re, im] pairs")
    return SzegoField(arr[:, 0] + 1j * arr[:, 1])


def save_field(u: FieldLike, path):
    Path(path).write_text(json.dumps(field_to_json(u)) + "\n")


def load_field(path) -> SzegoField:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}: not valid JSON ({exc})") from None
    return field_from_json(data)
