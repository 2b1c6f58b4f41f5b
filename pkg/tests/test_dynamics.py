import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szego_lab.birkhoff import build_F
from szego_lab.dynamics import (CSV_HEADER, SimParams, Trajectory, choose_dt, evolve, flow_chi,
                                lax_residual, orbit_distance, step, step_strang)
from szego_lab.errors import BlowUpError, ContractError, ConvergenceError
from szego_lab.oracle import oracle_coeffs
from szego_lab.spectral import SzegoField, sobolev_norm

from .conftest import random_field


def params(**kw):
    base = dict(epsilon=0.5, alpha=0.0, N=16, dt=1e-3, T=1.0)
    base.update(kw)
    return SimParams(**base)


# ---- parameters ----

@pytest.mark.parametrize("bad", [dict(epsilon=0.0), dict(epsilon=1.0), dict(alpha=-1), dict(N=0),
                                 dict(dt=0), dict(T=-1), dict(scheme="euler"), dict(monitor_stride=0),
                                 dict(orbit_m=99), dict(dispersion=-1.0)])
def test_params_validation(bad):
    with pytest.raises(ContractError):
        params(**bad)


def test_dispersion_coefficient():
    assert params(epsilon=0.25, alpha=2).D == pytest.approx(0.0625)
    assert params(dispersion=0.0).D == 0.0
    assert params(T=1.0, dt=1e-3, monitor_stride=7).n_rows == math.floor(1.0 / 7e-3) + 1


# ---- single steps ----

@pytest.mark.parametrize("scheme", ["strang", "rk4-full"])
@pytest.mark.parametrize("m,c,alpha", [(1, 1.0, 0.0), (3, 0.4 - 0.3j, 1.0), (0, 2.0, 2.0)])
def test_plane_wave_step_is_exact_phase(scheme, m, c, alpha):
    errs = []
    for dt in (0.02, 0.01):
        p = params(alpha=alpha, dt=dt, scheme=scheme)
        u = SzegoField.plane_wave(m, p.N, c)
        out = step(u, p)
        expect = c * np.exp(-1j * (p.D * m * m + abs(c) ** 2) * dt)
        errs.append(abs(out.coeffs[m] - expect))
    # local error is at least third order (RK4 on a single mode gives fifth)
    assert errs[1] < 1e-7
    assert errs[1] <= errs[0] / 8 or errs[0] < 1e-13
    assert np.count_nonzero(np.abs(out.coeffs) > 1e-15) == 1


def test_zero_stays_zero():
    p = params()
    assert step_strang(SzegoField.zeros(p.N), p) == SzegoField.zeros(p.N)
    tr = evolve(np.zeros(p.N + 1), p.with_(monitor_stride=100))
    assert np.all(tr.monitors[:, :5] == 0)


def test_field_size_mismatch():
    with pytest.raises(ContractError):
        step(random_field(5), params())


# ---- evolve ----

def test_plane_wave_conserves_to_roundoff():
    p = params(N=32, T=10.0, monitor_stride=500, orbit_m=1)
    tr = evolve(SzegoField.plane_wave(1, 32), p)
    d = tr.drifts()
    assert max(d.values()) < 1e-10
    assert np.nanmax(tr.column("orbit_dist")) < 1e-10


@pytest.mark.parametrize("T,dt,stride", [(1.0, 1e-3, 100), (1.0, 1e-3, 7), (0.5, 0.003, 10), (0.01, 1e-3, 50)])
def test_row_count(T, dt, stride):
    p = params(T=T, dt=dt, monitor_stride=stride)
    tr = evolve(random_field(16, decay=2) * 0.3, p, store_states=False)
    assert tr.times.size == math.floor(T / (dt * stride) + 1e-9) + 1
    assert tr.final_time == pytest.approx(T)
    assert tr.monitors.shape == (tr.times.size, len(CSV_HEADER) - 1)


def test_partial_final_step_reaches_T():
    u0 = random_field(16, decay=2) * 0.5
    a = evolve(u0, params(T=0.0105, dt=1e-3)).final_state
    b = evolve(u0, params(T=0.0105, dt=1.05e-3)).final_state
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-8


def _terminal(u0, p):
    return evolve(u0, p, store_states=False).final_state.coeffs


def test_strang_second_order():
    u0 = random_field(24, seed=3, decay=2.0)
    base = params(N=24, alpha=1.0, T=0.5, dt=0.01, monitor_stride=1000)
    ref = _terminal(u0, base.with_(dt=0.01 / 8))
    e1 = np.linalg.norm(_terminal(u0, base) - ref)
    e2 = np.linalg.norm(_terminal(u0, base.with_(dt=0.005)) - ref)
    assert 3.5 <= e1 / e2 <= 4.5


def test_integrating_factor_scheme_higher_order():
    u0 = random_field(24, seed=3, decay=2.0)
    base = params(N=24, alpha=1.0, T=0.5, dt=0.02, monitor_stride=1000, scheme="rk4-full")
    ref = _terminal(u0, base.with_(dt=0.02 / 8))
    e1 = np.linalg.norm(_terminal(u0, base) - ref)
    e2 = np.linalg.norm(_terminal(u0, base.with_(dt=0.01)) - ref)
    assert e1 / e2 > 10


@pytest.mark.parametrize("scheme", ["strang", "rk4-full"])
def test_time_reversibility(scheme):
    u0 = SzegoField(random_field(32, seed=8, decay=1.5) * 0.5)
    p = params(N=32, T=2.0, dt=1e-3, monitor_stride=2000, scheme=scheme)
    fwd = evolve(u0, p, store_states=False).final_state
    back = evolve(fwd, p, backward=True, store_states=False).final_state
    assert np.max(np.abs(back.coeffs - u0.coeffs)) < 1e-7


def test_backward_times_are_negative():
    tr = evolve(random_field(8) * 0.1, params(N=8, T=0.01, monitor_stride=5), backward=True)
    assert tr.times[-1] < 0 and tr.final_time == pytest.approx(-0.01)


def test_dispersionless_flow_matches_oracle():
    p = params(N=64, T=1.0, dt=5e-4, dispersion=0.0, monitor_stride=2000)
    end = _terminal(oracle_coeffs(0.3, 0.0, 64), p)
    ref = oracle_coeffs(0.3, 1.0, 64)
    # the truncation only matters at the size of the neglected tail |p|^N
    assert np.linalg.norm(end - ref) / np.linalg.norm(ref) < 1e-6


def test_blow_up_is_reported_with_partial_trajectory():
    u0 = random_field(8) * 50
    with pytest.raises(BlowUpError) as exc:
        evolve(u0, params(N=8, dt=0.1, T=5.0, monitor_stride=1))
    assert exc.value.trajectory is not None
    assert exc.value.t is not None


def test_choose_dt_halves_until_quiet():
    u0 = random_field(64, seed=1, decay=2) * 0.3
    p = params(N=64, dt=0.05, T=1.0, alpha=0.0)
    dt = choose_dt(u0, p, tol=1e-8)
    assert dt < 0.05
    assert evolve(u0, p.with_(dt=dt, monitor_stride=1), store_states=False).drift("E") <= 1e-8


def test_choose_dt_gives_up_loudly():
    u0 = random_field(64, seed=1, decay=2) * 0.3
    with pytest.raises(ConvergenceError):
        choose_dt(u0, params(N=64, dt=0.05, T=1.0), tol=1e-14, max_halvings=1)


# ---- trajectory container ----

def test_csv_layout():
    tr = evolve(SzegoField.plane_wave(1, 8), params(N=8, T=0.01, monitor_stride=5, orbit_m=1))
    lines = tr.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == tr.times.size + 1
    assert float(lines[1].split(",")[0]) == 0.0


def test_trajectory_rejects_repeated_times():
    with pytest.raises(ContractError):
        Trajectory(np.array([0.0, 0.0]), [], np.zeros((2, 6)))


def test_orbit_distance():
    u = SzegoField.plane_wave(2, 6, np.exp(0.4j))
    assert orbit_distance(u, 2) == pytest.approx(0.0, abs=1e-15)
    v = u.coeffs.copy()
    v[0] = 0.1
    assert orbit_distance(v, 2, s=1) == pytest.approx(0.1)
    assert orbit_distance(np.zeros(7), 2, s=0) == pytest.approx(1.0)


# ---- auxiliary flow ----

F8 = build_F(8, exact=False)


def test_flow_chi_identity_at_zero():
    v = random_field(8) * 0.3
    np.testing.assert_array_equal(flow_chi(v, F8, 1.0, 0.0), v)


@settings(max_examples=10)
@given(st.integers(0, 2**16))
def test_flow_chi_round_trip(seed):
    v = random_field(8, seed=seed) * 0.3
    w = flow_chi(flow_chi(v, F8, 0.5, 1.0), F8, 0.5, -1.0)
    assert np.max(np.abs(w - v)) < 1e-8


def test_flow_chi_cubic_smallness():
    v = random_field(8, seed=2)
    v = v / sobolev_norm(v, 1.0)
    scales = np.array([0.02, 0.04, 0.08])
    dev = np.array([sobolev_norm(flow_chi(v, F8, s, 1.0) - v, 1.0) for s in scales])
    slope = np.polyfit(np.log(scales), np.log(dev), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)  # linear in scale at fixed |v| = 1
    C = np.max(dev / scales)
    assert C < 10


def test_flow_chi_rejects_long_time():
    with pytest.raises(ContractError):
        flow_chi(random_field(8), F8, 1.0, 1.5)


# ---- Lax pair ----

def test_lax_residual_trivial_cases():
    p = params(N=16, dispersion=0.0, dt=1e-4)
    # Gamma only rotates; what remains is the trapezoid defect c w (w h)^2 / 12
    assert lax_residual(SzegoField.plane_wave(0, 16, 0.5j), p, 1e-3) < 1e-8
    assert lax_residual(np.zeros(17), p, 0.01) == 0.0


def test_lax_residual_second_order():
    p = params(N=32, dispersion=0.0, dt=1e-4)
    V = oracle_coeffs(0.3, 0.0, 32)
    r = [lax_residual(V, p, h) for h in (0.02, 0.01)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.1)


def test_lax_needs_dispersionless_flow():
    with pytest.raises(ContractError):
        lax_residual(random_field(8), params(N=8), 0.01)
