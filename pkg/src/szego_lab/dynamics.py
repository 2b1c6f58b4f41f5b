"""Time integration of i u_t + D u_xx = Pi(|u|^2 u) on truncated L^2_+.

D is the dispersion coefficient (epsilon**alpha, or an explicit override such
as nu**2 or 0). Two schemes are available:

``strang``
    half linear step, RK4 on the cubic part, half linear step.
``rk4-full``
    integrating-factor RK4: the linear flow is exact and the cubic term is
    handled in the interaction picture.

Q and I move only by the RK4 truncation error (about 1e-12 relative at the
usual step sizes). Energy errors are O(dt^2) and O(dt^4) respectively away
from step-size resonances (D k^2 dt near 2 pi j).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .errors import BlowUpError, ContractError, ConvergenceError, FlowDivergenceError
from .poly import PolyHamiltonian, vector_field_array
from .spectral import (SzegoField, as_coeffs, conserved_quantities, hankel_matrix,
                       sobolev_norm, toeplitz_abs2)

SCHEMES = ("strang", "rk4-full")
NORM_CEILING = 1e8
CSV_HEADER = ("t", "Q", "I", "E", "H1", "Hs", "orbit_dist")


@dataclass(frozen=True)
class SimParams:
    epsilon: float
    alpha: float
    N: int
    dt: float
    T: float
    scheme: str = "strang"
    monitor_stride: int = 1
    s: float = 1.0                      # index of the Hs monitor column
    orbit_m: Optional[int] = None       # plane wave used for orbit_dist
    dispersion: Optional[float] = None  # overrides epsilon**alpha when set
    D: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ContractError("epsilon must lie in (0, 1)")
        if self.alpha < 0:
            raise ContractError("alpha must be >= 0")
        if int(self.N) != self.N or self.N < 1:
            raise ContractError("N must be a positive integer")
        if not self.dt > 0 or not math.isfinite(self.dt):
            raise ContractError("dt must be positive")
        if not self.T > 0 or not math.isfinite(self.T):
            raise ContractError("T must be positive")
        if self.scheme not in SCHEMES:
            raise ContractError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if int(self.monitor_stride) != self.monitor_stride or self.monitor_stride < 1:
            raise ContractError("monitor_stride must be a positive integer")
        if self.orbit_m is not None and not 0 <= self.orbit_m <= self.N:
            raise ContractError("orbit_m outside 0..N")
        D = self.epsilon**self.alpha if self.dispersion is None else float(self.dispersion)
        if D < 0:
            raise ContractError("dispersion coefficient must be >= 0")
        object.__setattr__(self, "D", D)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.dt + 1e-9))

    @property
    def n_rows(self) -> int:
        return int(math.floor(self.T / (self.dt * self.monitor_stride) + 1e-9)) + 1

    def half_phase(self, dt=None):
        dt = self.dt if dt is None else dt
        k = np.arange(self.N + 1, dtype=float)
        return np.exp(-0.5j * self.D * k * k * dt)

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class Trajectory:
    """Sampled solution. ``monitors`` has one row per time with CSV_HEADER[1:] columns."""

    times: np.ndarray
    states: list
    monitors: np.ndarray
    params: Optional[SimParams] = None
    final_time: float = 0.0
    final_state: Optional[SzegoField] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1 and np.any(np.diff(self.times) == 0):
            raise ContractError("trajectory times must be strictly monotone")
        if self.monitors.shape[0] != self.times.size:
            raise ContractError("monitor rows do not align with times")

    def column(self, name):
        return self.monitors[:, CSV_HEADER.index(name) - 1]

    def drift(self, name) -> float:
        """max_t |X(t) - X(0)| / |X(0)| for a monitored scalar."""
        x = self.column(name)
        ref = abs(x[0])
        if ref == 0:
            return float(np.max(np.abs(x - x[0])))
        return float(np.max(np.abs(x - x[0])) / ref)

    def drifts(self):
        return {k: self.drift(k) for k in ("Q", "I", "E")}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, row in zip(self.times, self.monitors):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def orbit_distance(u, m: int, s: float = 1.0) -> float:
    """inf_theta ||u - e^{i theta} e_m||_{H^s}, attained at theta = arg u_m."""
    c = as_coeffs(u)
    k = np.arange(c.size, dtype=float)
    w = (1 + k * k) ** s
    a = np.abs(c) ** 2
    total = np.sum(w * a) - w[m] * a[m] + w[m] * (abs(c[m]) - 1.0) ** 2
    return float(np.sqrt(max(total, 0.0)))


def monitor_row(u, p: SimParams):
    Q, I, E = conserved_quantities(u, dispersion=p.D)
    od = orbit_distance(u, p.orbit_m, p.s) if p.orbit_m is not None else float("nan")
    return (Q, I, E, sobolev_norm(u, 1.0), sobolev_norm(u, p.s), od)


def _advance(x, p: SimParams, nsteps: int, dt: float):
    if nsteps <= 0:
        return x
    ph = p.half_phase(dt)
    if p.scheme == "strang":
        return kernels.strang_steps(x, ph, dt, nsteps)
    return kernels.lawson_steps(x, ph, dt, nsteps)


def _check_field(u, p: SimParams):
    c = as_coeffs(u)
    if c.size != p.N + 1:
        raise ContractError(f"field has N={c.size - 1}, parameters say N={p.N}")
    return np.array(c, dtype=np.complex128)


def step_strang(u, p: SimParams) -> SzegoField:
    """One Strang step of size p.dt."""
    x = _check_field(u, p)
    y = kernels.strang_steps(x, p.half_phase(), p.dt, 1)
    if not np.all(np.isfinite(y)):
        raise BlowUpError("non-finite state after one step", t=p.dt)
    return SzegoField(y)


def step(u, p: SimParams) -> SzegoField:
    x = _check_field(u, p)
    y = _advance(x, p, 1, p.dt)
    if not np.all(np.isfinite(y)):
        raise BlowUpError("non-finite state after one step", t=p.dt)
    return SzegoField(y)


def evolve(u0, p: SimParams, backward: bool = False, store_states: bool = True) -> Trajectory:
    """Integrate from 0 to T (or -T when ``backward``), sampling every monitor_stride steps.

    Rows are taken at t = j * stride * dt; if T is not a multiple of dt the
    remainder is covered by one short step and stored as ``final_state``.
    """
    x = _check_field(u0, p)
    sgn = -1.0 if backward else 1.0
    dt = sgn * p.dt
    nsteps = p.n_steps
    stride = p.monitor_stride
    times, states, rows = [], [], []

    def record(t, y):
        times.append(t)
        rows.append(monitor_row(y, p))
        if store_states:
            states.append(SzegoField(y))

    def partial():
        mon = np.array(rows, dtype=float).reshape(len(rows), len(CSV_HEADER) - 1)
        return Trajectory(np.array(times), states, mon, p,
                          final_time=times[-1] if times else 0.0,
                          final_state=states[-1] if states else None)

    record(0.0, x)
    done = 0
    while done < nsteps:
        n = min(stride, nsteps - done)
        x = _advance(x, p, n, dt)
        done += n
        t = sgn * done * p.dt
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"non-finite state reached near t={t:g}", t=t, trajectory=partial())
        hs = max(sobolev_norm(x, 1.0), sobolev_norm(x, p.s))
        if hs > NORM_CEILING:
            raise BlowUpError(f"norm {hs:.3e} exceeded ceiling {NORM_CEILING:g} at t={t:g}",
                              t=t, trajectory=partial())
        if n == stride:
            record(t, x)
    rest = p.T - nsteps * p.dt
    final_t = sgn * nsteps * p.dt
    if rest > 1e-12 * max(1.0, p.T):
        x = _advance(x, p, 1, sgn * rest)
        final_t = sgn * p.T
        if not np.all(np.isfinite(x)):
            raise BlowUpError("non-finite state in final partial step", t=final_t, trajectory=partial())
    traj = partial()
    traj.final_time = final_t
    traj.final_state = SzegoField(x)
    return traj


def choose_dt(u0, p: SimParams, window: float = 1.0, tol: float = 1e-8, max_halvings: int = 8) -> float:
    """Monitor rule: halve dt until the energy drift over one window is <= tol."""
    dt = p.dt
    for _ in range(max_halvings + 1):
        q = p.with_(dt=dt, T=min(window, p.T), monitor_stride=1)
        drift = evolve(u0, q, store_states=False).drift("E")
        if drift <= tol:
            return dt
        dt *= 0.5
    raise ConvergenceError(f"energy drift {drift:.2e} still above {tol:g} after {max_halvings} halvings "
                           f"(dt={2 * dt:.3g})")


# ---- auxiliary Hamiltonian flows ----

def flow_chi(v, F: PolyHamiltonian, scale: float, sigma: float, rtol: float = 1e-10):
    """Time-sigma map of d/dsigma chi = scale * X_F(chi), by adaptive DOP853."""
    if abs(sigma) > 1 + 1e-12:
        raise ContractError("|sigma| must be <= 1")
    x0 = np.array(as_coeffs(v), dtype=np.complex128)
    if sigma == 0 or F.is_zero():
        return SzegoField(x0) if isinstance(v, SzegoField) else x0
    if F.max_mode() >= x0.size:
        raise ContractError("generator involves modes beyond the field truncation")
    if not F.is_real:
        raise ContractError("generator must be real-valued")

    def rhs(_, y):
        return scale * vector_field_array(F, y)

    atol = rtol * max(1.0, float(np.max(np.abs(x0))))
    sol = solve_ivp(rhs, (0.0, sigma), x0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        raise FlowDivergenceError(f"auxiliary flow failed before sigma={sigma}: {sol.message}")
    y = sol.y[:, -1]
    return SzegoField(y) if isinstance(v, SzegoField) else y


# ---- Lax pair ----

def lax_generator(V):
    """Matrix of B_V = (i/2) H_V^2 - i T_{|V|^2}, with H_V^2 acting as Gamma conj(Gamma)."""
    G = hankel_matrix(V)
    return 0.5j * (G @ G.conj()) - 1j * toeplitz_abs2(V)


def lax_rhs(V):
    """Right side of dGamma/dt = B Gamma - Gamma conj(B) (antilinear bookkeeping)."""
    G = hankel_matrix(V)
    B = lax_generator(V)
    return B @ G - G @ B.conj()


def lax_residual(V, p: SimParams, dt_probe: float) -> float:
    """Spectral norm of (Gamma(t+h) - Gamma(t))/h - (C(t) + C(t+h))/2, h = dt_probe.

    C is :func:`lax_rhs`; the trapezoid makes the defect O(h^2) for an exact flow.
    """
    if p.D != 0:
        raise ContractError("the Lax pair holds only for the dispersionless flow")
    x0 = _check_field(V, p)
    if not np.any(x0):
        return 0.0
    n = max(1, int(math.ceil(dt_probe / p.dt - 1e-9)))
    h = dt_probe / n
    x1 = _advance(x0, p, n, h)
    G0, G1 = hankel_matrix(x0), hankel_matrix(x1)
    R = (G1 - G0) / dt_probe - 0.5 * (lax_rhs(x0) + lax_rhs(x1))
    return float(np.linalg.norm(R, 2))
