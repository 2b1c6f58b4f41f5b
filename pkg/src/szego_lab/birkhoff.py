"""Normal-form generators, the plane-wave frame, and resonance enumeration.

Small-data layer: F with coefficients f = i / (4 (k1^2 - k2^2 + k3^2 - k4^2))
solves {F, H0} + R = R~ after the global gauge v = e^{2 i t eps^2 Q} mu.

Plane-wave layer: F_m = sum_{j-l+k=m} Re(a_{j,l,k} v_j conj(v_l) v_k) solves
{F_m, L_m} = -N~2 and removes every monomial of {F_m, H0^m} + H1^m whose
conjugated mode and one holomorphic mode are >= 2m+1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from . import poly as P
from .dynamics import Trajectory
from .errors import ContractError, FrameDegenerateError, SmallDivisorError
from .gaussian import GaussianRational
from .poly import PolyHamiltonian, poisson_bracket
from .spectral import SzegoField, as_coeffs

DIVISOR_TOL = 1e-9
EXACT_N_MAX = 64


# ---------------------------------------------------------------- small data

def f_coefficient(k1: int, k2: int, k3: int, k4: int) -> GaussianRational:
    if k1 - k2 + k3 - k4 != 0:
        raise ContractError(f"({k1},{k2},{k3},{k4}) violates k1-k2+k3-k4=0")
    d = k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4
    if d == 0:
        return GaussianRational()
    return GaussianRational(0, Fraction(1, 4 * d))


def build_F(N: int, exact: bool = True) -> PolyHamiltonian:
    """Degree-4 generator of the small-data normal form on modes <= N."""
    if N > EXACT_N_MAX:
        raise ContractError(f"N={N} exceeds the exact-arithmetic budget {EXACT_N_MAX}")
    items = []
    for k1, k2, k3, k4 in P.quartic_tuples(N):
        f = f_coefficient(k1, k2, k3, k4)
        if f:
            items.append(((k1, k3), (k2, k4), f if exact else complex(f)))
    F = PolyHamiltonian.from_terms(items, exact=exact)
    if not F.is_real:
        raise AssertionError("F failed the conjugation-closure check")
    return F


def gauge_transform(traj: Trajectory, epsilon: float) -> Trajectory:
    """v(t) = e^{2 i t eps^2 Q(0)} mu(t) for a trajectory of mu.

    ``traj`` must solve i mu_t + mu_xx = eps^2 Pi(|mu|^2 mu); the result then
    solves i v_t + v_xx = eps^2 (Pi(|v|^2 v) - 2 Q v).
    """
    Q0 = float(traj.column("Q")[0])
    phase = np.exp(2j * traj.times * epsilon**2 * Q0)
    states = [SzegoField(s.coeffs * ph) for s, ph in zip(traj.states, phase)]
    out = Trajectory(traj.times.copy(), states, traj.monitors.copy(), traj.params,
                     final_time=traj.final_time, final_state=None)
    if traj.final_state is not None:
        out.final_state = SzegoField(traj.final_state.coeffs * np.exp(2j * traj.final_time * epsilon**2 * Q0))
    return out


def gauged_rhs(v, epsilon: float) -> np.ndarray:
    """dv/dt for the gauged equation: -i(k^2 v + eps^2 (Pi(|v|^2 v) - 2 Q v))."""
    from .spectral import cubic_nonlinearity
    x = as_coeffs(v)
    k = np.arange(x.size, dtype=float)
    Q = float(np.sum(np.abs(x) ** 2))
    return -1j * ((k * k) * x + epsilon**2 * (cubic_nonlinearity(x).coeffs - 2 * Q * x))


def gauge_residual(traj: Trajectory, epsilon: float) -> float:
    """Largest centred finite-difference defect of the gauged equation, relative to |dv/dt|."""
    states = [as_coeffs(s) for s in traj.states]
    t = traj.times
    worst = 0.0
    for i in range(1, len(states) - 1):
        h = t[i + 1] - t[i - 1]
        fd = (states[i + 1] - states[i - 1]) / h
        rhs = gauged_rhs(states[i], epsilon)
        worst = max(worst, float(np.linalg.norm(fd - rhs) / max(np.linalg.norm(rhs), 1e-300)))
    return worst


# ------------------------------------------------------------- plane waves

@dataclass
class FrameRecord:
    theta: np.ndarray
    phi: np.ndarray
    v_states: list
    m: int
    epsilon: float
    alpha: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))


def plane_wave_frame(traj: Trajectory, m: int, epsilon: float, alpha: float,
                     dispersion: Optional[float] = None) -> FrameRecord:
    """Rotate out the phase of u_m and rescale: u = e^{i theta}(e_m + eps^{1-alpha/2} v).

    theta is unwrapped after removing the linear drift -(1 + m^2 D) t, which
    leaves a slowly varying remainder; consecutive samples of that remainder
    must differ by less than pi/2.
    """
    D = epsilon**alpha if dispersion is None else dispersion
    times = np.asarray(traj.times, dtype=float)
    coeffs = [as_coeffs(s) for s in traj.states]
    if not coeffs:
        raise ContractError("trajectory carries no states")
    if m >= coeffs[0].size:
        raise ContractError(f"mode {m} beyond truncation")
    um = np.array([c[m] for c in coeffs])
    if np.any(np.abs(um) < 1e-6):
        i = int(np.argmin(np.abs(um)))
        raise FrameDegenerateError(f"|u_{m}| = {abs(um[i]):.2e} at t={times[i]:g}")
    drift = -(1 + m * m * D) * times
    rem = np.angle(um * np.exp(-1j * drift))
    jumps = np.angle(np.exp(1j * np.diff(rem)))
    if np.any(np.abs(jumps) >= np.pi / 2):
        raise ContractError("phase of u_m is undersampled; lower monitor_stride")
    rem = rem[0] + np.concatenate([[0.0], np.cumsum(jumps)])
    theta = drift + rem
    scale = epsilon ** (1 - alpha / 2)
    phi = rem / epsilon ** min(1.0, 2 - alpha)
    vs = []
    for c, th in zip(coeffs, theta):
        v = c * np.exp(-1j * th)
        v[m] -= 1.0
        v /= scale
        if abs(v[m].imag) > 1e-8 * max(1.0, abs(v[m])):
            raise AssertionError("v_m failed to be real in the rotated frame")
        v[m] = v[m].real
        vs.append(SzegoField(v))
    return FrameRecord(theta, phi, vs, m, epsilon, alpha, times)


def frame_rhs(v, m: int, epsilon: float, alpha: float, dphi: float) -> np.ndarray:
    """dv/dt from the frame equation, given phi'(t)."""
    from .spectral import cubic_nonlinearity
    x = np.asarray(as_coeffs(v), dtype=np.complex128)
    n = x.size
    D = epsilon**alpha
    e1 = epsilon ** (1 - alpha / 2)
    e2 = epsilon ** min(alpha / 2, 1 - alpha / 2)
    emin = epsilon ** min(1.0, 2 - alpha)
    k = np.arange(n, dtype=float)
    hank = np.zeros(n, dtype=np.complex128)
    for j in range(0, min(2 * m, n - 1) + 1):
        hank[j] = np.conj(x[2 * m - j]) if 2 * m - j < n else 0.0
    # Pi(e^{-imx} v^2 + 2 e^{imx} |v|^2), truncated at N
    L = 4 * n
    g = np.fft.ifft(x, n=L) * L
    xg = np.exp(1j * 2 * np.pi * np.arange(L) / L)
    prod = xg ** (-m) * g * g + 2 * xg**m * np.abs(g) ** 2
    quad = np.fft.fft(prod)[:n] / L
    em = np.zeros(n, dtype=np.complex128)
    em[m] = 1.0
    rhs = (e2 * dphi * em + e1 * quad + epsilon ** (2 - alpha) * cubic_nonlinearity(x).coeffs)
    lin = -D * k * k * x - hank - (1 - m * m * D + emin * dphi) * x
    # i v_t + lin_terms = rhs  =>  v_t = -i (rhs - lin_terms) with lin_terms = D v_xx - H v - (...) v
    return -1j * (rhs - lin)


# -------------------------------------------------------- homological layer

@dataclass
class DivisorReport:
    entries: List[Tuple[int, int, float]] = field(default_factory=list)
    tolerance: float = DIVISOR_TOL

    @property
    def min_abs(self) -> float:
        return min((abs(d) for _, _, d in self.entries), default=math.inf)

    @property
    def degenerate(self) -> bool:
        return self.min_abs < self.tolerance

    def add(self, j, k, d):
        self.entries.append((j, k, float(d)))

    def to_dict(self):
        worst = sorted(self.entries, key=lambda e: abs(e[2]))[:5]
        return {
            "n_divisors": len(self.entries),
            "min_abs_divisor": None if not self.entries else self.min_abs,
            "degenerate": self.degenerate,
            "tolerance": self.tolerance,
            "smallest": [list(e) for e in worst],
        }


def _disp_value(alpha, epsilon, dispersion):
    """epsilon**alpha, as an exact Fraction when alpha == 0 or dispersion is rational."""
    if dispersion is not None:
        return dispersion
    if alpha == 0:
        return Fraction(1)
    return epsilon**alpha


def _is_exact_disp(D):
    return isinstance(D, (int, Fraction))


def _divide(num, den, exact):
    """num/den where num is i*rational; den rational (exact) or float."""
    if exact:
        return GaussianRational(0, Fraction(num) / Fraction(den))
    return 1j * float(num) / float(den)


def a_coefficient(j: int, l: int, k: int, m: int, alpha: float = 0.0, epsilon: float = 0.5,
                  dispersion=None, report: Optional[DivisorReport] = None):
    """Coefficient a_{j,l,k} of F_m (symmetric in j, k).

    Nonzero only when l >= 2m+1 and max(j,k) >= 2m+1; everything else is the
    zero padding of the low-frequency block.
    """
    if j - l + k != m:
        raise ContractError(f"({j},{l},{k}) violates j-l+k=m={m}")
    if min(j, l, k, m) < 0:
        raise ContractError("indices must be nonnegative")
    D = _disp_value(alpha, epsilon, dispersion)
    exact = _is_exact_disp(D)
    zero = GaussianRational() if exact else 0j
    p, q = min(j, k), max(j, k)
    if l < 2 * m + 1 or q < 2 * m + 1:
        return zero

    def check(dj, dk, d):
        if report is not None:
            report.add(dj, dk, d)
        if abs(d) < DIVISOR_TOL:
            raise SmallDivisorError(
                f"divisor 1-2({dj}-{m})({dk}-{m})eps^alpha = {float(d):.3e} for a_({j},{l},{k})",
                report=report)

    if p >= 2 * m + 1:
        d = 1 - 2 * (p - m) * (q - m) * D
        check(p, q, d)
        return _divide(1, d, exact)
    if p == m:
        return GaussianRational(0, Fraction(1, 2)) if exact else 0.5j
    if p < m:
        # a_{j,k',k'+m-j} with j = p, middle index k' = l
        jj, kk = p, l
        d = 1 - 2 * (kk - m) * (kk - jj) * D
        check(jj, kk, d)
        return _divide(m - kk, (m - jj) * d, exact) if exact else 1j * (m - kk) / ((m - jj) * d)
    # m < p <= 2m: a_{2m-j, m+k'-j, k'} with k' = q
    jj, kk = 2 * m - p, q
    d = 1 - 2 * (kk - m) * (kk - jj) * D
    check(jj, kk, d)
    return _divide(kk - jj, (m - jj) * d, exact) if exact else 1j * (kk - jj) / ((m - jj) * d)


def build_Fm(m: int, N: int, alpha: float = 0.0, epsilon: float = 0.5, dispersion=None,
             report: Optional[DivisorReport] = None) -> PolyHamiltonian:
    """F_m on modes <= N; exact when epsilon**alpha is rational (alpha = 0 in particular)."""
    D = _disp_value(alpha, epsilon, dispersion)
    exact = _is_exact_disp(D)
    if exact and N > EXACT_N_MAX:
        raise ContractError(f"N={N} exceeds the exact-arithmetic budget {EXACT_N_MAX}")
    half = GaussianRational(Fraction(1, 2)) if exact else 0.5
    items = []
    for j in range(N + 1):
        for k in range(N + 1):
            l = j + k - m
            if not 0 <= l <= N:
                continue
            a = a_coefficient(j, l, k, m, dispersion=D, report=report)
            if a:
                items.append(((j, k), (l,), a * half))
                items.append(((l,), (j, k), a.conjugate() * half))
    return PolyHamiltonian.from_terms(items, exact=exact)


def R_m(m: int, N: int, alpha: float = 0.0, epsilon: float = 0.5, dispersion=None,
        Fm: Optional[PolyHamiltonian] = None) -> PolyHamiltonian:
    """{F_m, H0^m} + H1^m."""
    D = _disp_value(alpha, epsilon, dispersion)
    exact = _is_exact_disp(D)
    if Fm is None:
        Fm = build_Fm(m, N, dispersion=D)
    H0 = P.h0_m(m, N, dispersion=D, exact=exact)
    H1 = P.h1_m(m, N, exact=exact)
    return poisson_bracket(Fm, H0) + H1


def high_resonant_part(R: PolyHamiltonian, m: int) -> PolyHamiltonian:
    """Cubic monomials v_j conj(v_l) v_k (and conjugates) with l >= 2m+1 and max(j,k) >= 2m+1."""
    cut = 2 * m + 1

    def keep(anti, holo):
        if len(anti) == 1 and len(holo) == 2:
            single, pair = anti, holo
        elif len(anti) == 2 and len(holo) == 1:
            single, pair = holo, anti
        else:
            return False
        return single[0] >= cut and max(pair) >= cut

    return R.restrict(keep)


# -------------------------------------------------------------- resonances

def _pairings_ok(t):
    k1, k2, k3, k4 = t
    return (k1 == k2 and k3 == k4) or (k1 == k4 and k2 == k3)


def enumerate_resonances(order: int, N: int):
    """All tuples in [0,N]^order with sum (-1)^i k_i = 0 and sum (-1)^i k_i^2 = 0.

    Order 4: returns the tuples and asserts they are exactly the pairings.
    Order 6: returns (all tuples, the non-trivial ones with k5 != k6), where
    trivial means {k1,k3,k5} = {k2,k4,k6} as multisets.
    """
    if order == 4:
        if N > 64:
            raise ContractError("order 4 enumeration supports N <= 64")
        found = sorted(t for t in P.quartic_tuples(N)
                       if t[0] ** 2 - t[1] ** 2 + t[2] ** 2 - t[3] ** 2 == 0)
        return found
    if order == 6:
        if N > 24:
            raise ContractError("order 6 enumeration supports N <= 24")
        r = np.arange(N + 1)
        out = []
        for k1 in range(N + 1):
            k2, k3, k4, k5 = np.meshgrid(r, r, r, r, indexing="ij")
            k6 = k1 - k2 + k3 - k4 + k5
            ok = (k6 >= 0) & (k6 <= N)
            sq = k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4 + k5 * k5 - k6 * k6
            ok &= sq == 0
            for row in np.argwhere(ok):
                a, b, c, d = (int(x) for x in row)
                out.append((k1, int(r[a]), int(r[b]), int(r[c]), int(r[d]), int(k6[a, b, c, d])))
        out.sort()
        nontrivial = [t for t in out if t[4] != t[5]
                      and sorted((t[0], t[2], t[4])) != sorted((t[1], t[3], t[5]))]
        return out, nontrivial
    raise ContractError("order must be 4 or 6")


def pairing_characterization(N: int):
    """The order-4 resonant set predicted by the pairing rule."""
    out = set()
    for a, b in itertools.product(range(N + 1), repeat=2):
        out.add((a, a, b, b))
        out.add((a, b, b, a))
    return sorted(out)
