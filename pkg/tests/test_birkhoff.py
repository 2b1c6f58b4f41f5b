from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from szego_lab import birkhoff as B
from szego_lab import poly as P
from szego_lab.dynamics import SimParams, Trajectory, evolve
from szego_lab.errors import ContractError, FrameDegenerateError, SmallDivisorError
from szego_lab.gaussian import GaussianRational
from szego_lab.poly import poisson_bracket
from szego_lab.spectral import SzegoField, sobolev_norm

from .conftest import random_field

HALF_I = GaussianRational(0, Fraction(1, 2))


# ---- small-data generator ----

def test_f_coefficient_values():
    assert B.f_coefficient(1, 0, 1, 2) == GaussianRational(0, Fraction(-1, 8))
    assert B.f_coefficient(2, 1, 0, 1) == GaussianRational(0, Fraction(1, 8))
    with pytest.raises(ContractError):
        B.f_coefficient(1, 0, 0, 0)


@given(st.integers(0, 30), st.integers(0, 30))
def test_f_vanishes_on_pairings(k, l):
    assert not B.f_coefficient(k, k, l, l)
    assert not B.f_coefficient(k, l, l, k)


def test_build_F_small_cases():
    assert B.build_F(1).is_zero()
    F = B.build_F(6)
    assert F.is_real and F.degrees() == [4]
    # each stored coefficient collects at most 4 orderings of a quadruple with |f| <= 1/4
    assert max(abs(c) for _, c in F.items()) <= 1.0


@given(st.integers(0, 12), st.integers(0, 12), st.integers(0, 12))
def test_f_bound(k1, k2, k3):
    k4 = k1 - k2 + k3
    if k4 >= 0:
        assert abs(B.f_coefficient(k1, k2, k3, k4)) <= 0.25


@pytest.mark.parametrize("N", [2, 5, 8])
def test_small_data_homological_equation(N):
    F = B.build_F(N)
    assert (poisson_bracket(F, P.h0(N)) + P.r_term(N) - P.r_tilde(N)).is_zero()


def test_build_F_budget():
    with pytest.raises(ContractError):
        B.build_F(65)


# ---- gauge ----

def _small_traj(eps, N=8, T=1.0, seed=0, mu0=None):
    p = SimParams(epsilon=0.5, alpha=0.0, N=N, dt=1e-3, T=T, monitor_stride=10)
    u0 = eps * (random_field(N, seed=seed, decay=2) if mu0 is None else mu0)
    tr = evolve(u0, p)
    mu = Trajectory(tr.times, [SzegoField(s.coeffs / eps) for s in tr.states],
                    tr.monitors / np.array([eps**2, eps**2, 1, eps, eps, 1.0]), p)
    return mu


def test_gauge_initial_state_unchanged():
    mu = _small_traj(0.1)
    v = B.gauge_transform(mu, 0.1)
    assert v.states[0] == mu.states[0]
    for a, b in zip(v.states, mu.states):
        assert sobolev_norm(a, 2) == pytest.approx(sobolev_norm(b, 2), rel=1e-13)


def test_gauge_constant_mode():
    eps, c = 0.2, 0.8 - 0.3j
    mu0 = np.zeros(9, complex)
    mu0[0] = c
    v = B.gauge_transform(_small_traj(eps, mu0=mu0), eps)
    for t, s in zip(v.times, v.states):
        assert s.coeffs[0] == pytest.approx(c * np.exp(1j * t * eps**2 * abs(c) ** 2), abs=1e-10)


def test_gauged_equation_residual():
    eps = 0.2
    r1 = B.gauge_residual(B.gauge_transform(_small_traj(eps, N=8, T=0.2), eps), eps)
    assert r1 < 0.05
    p = SimParams(epsilon=0.5, alpha=0.0, N=8, dt=1e-3, T=0.2, monitor_stride=5)
    tr = evolve(eps * random_field(8, decay=2), p)
    mu = Trajectory(tr.times, [SzegoField(s.coeffs / eps) for s in tr.states], tr.monitors / eps**2, p)
    r2 = B.gauge_residual(B.gauge_transform(mu, eps), eps)
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)  # centred differences: O(h^2)


# ---- plane-wave frame ----

def _plane_traj(m, c, alpha, eps, N=8, T=1.0, stride=10):
    p = SimParams(epsilon=eps, alpha=alpha, N=N, dt=1e-3, T=T, monitor_stride=stride, orbit_m=m)
    return evolve(SzegoField.plane_wave(m, N, c), p)


@pytest.mark.parametrize("m,alpha", [(1, 0.0), (2, 1.0), (0, 0.0)])
def test_frame_of_exact_plane_wave(m, alpha):
    eps, c = 0.3, 1.1
    fr = B.plane_wave_frame(_plane_traj(m, c, alpha, eps), m, eps, alpha)
    expect = (abs(c) - 1) / eps ** (1 - alpha / 2)
    for v in fr.v_states:
        assert v.coeffs[m] == pytest.approx(expect, abs=1e-9)
        assert np.sum(np.abs(v.coeffs)) == pytest.approx(abs(expect), abs=1e-9)
    # theta = -(1 + m^2 D) t + eps^{min(1, 2-alpha)} phi holds by construction
    D = eps**alpha
    recon = -(1 + m * m * D) * fr.times + eps ** min(1, 2 - alpha) * fr.phi
    np.testing.assert_allclose(fr.theta, recon, atol=1e-12)
    # the nonlinear shift |c|^2 - 1 shows up as a linear phi
    slope = np.polyfit(fr.times, fr.phi, 1)[0]
    assert slope == pytest.approx(-(abs(c) ** 2 - 1) / eps ** min(1, 2 - alpha), rel=1e-6)


def test_frame_of_perturbed_wave_is_bounded_and_real():
    eps, m = 0.05, 1
    p = SimParams(epsilon=eps, alpha=0.0, N=16, dt=1e-3, T=5.0, monitor_stride=20, orbit_m=m)
    u0 = eps * random_field(16, seed=3, decay=2)
    u0 /= sobolev_norm(u0, 1) / eps
    u0[m] += 1
    fr = B.plane_wave_frame(evolve(u0, p), m, eps, 0.0)
    vm = np.array([v.coeffs[m] for v in fr.v_states])
    assert np.all(vm.imag == 0)
    assert np.max(np.abs(vm)) < 3


def test_frame_rhs_matches_trajectory():
    eps, m, alpha = 0.1, 1, 0.0
    u0 = eps * random_field(12, seed=5, decay=2)
    u0[m] += 1

    def defect(stride):
        p = SimParams(epsilon=eps, alpha=alpha, N=12, dt=1e-4, T=0.02, monitor_stride=stride, orbit_m=m)
        fr = B.plane_wave_frame(evolve(u0, p), m, eps, alpha)
        i = 20 // stride
        h = fr.times[i + 1] - fr.times[i - 1]
        dphi = (fr.phi[i + 1] - fr.phi[i - 1]) / h
        fd = (fr.v_states[i + 1].coeffs - fr.v_states[i - 1].coeffs) / h
        rhs = B.frame_rhs(fr.v_states[i], m, eps, alpha, dphi)
        return np.linalg.norm(fd - rhs) / np.linalg.norm(rhs)

    d10, d5 = defect(10), defect(5)
    assert d10 < 2e-3
    assert d10 / d5 == pytest.approx(4.0, rel=0.15)


def test_frame_degenerate():
    p = SimParams(epsilon=0.5, alpha=0.0, N=4, dt=1e-3, T=0.01, monitor_stride=5)
    tr = evolve(SzegoField.plane_wave(2, 4), p)
    with pytest.raises(FrameDegenerateError):
        B.plane_wave_frame(tr, 1, 0.5, 0.0)


def test_frame_undersampled():
    tr = _plane_traj(1, 2.0, 0.0, 0.5, T=2.0, stride=1000)
    with pytest.raises(ContractError):
        B.plane_wave_frame(tr, 1, 0.5, 0.0)


# ---- homological layer ----

def test_a_coefficient_values():
    assert B.a_coefficient(1, 2, 1, 0) == GaussianRational(0, -1)
    for m in (0, 1, 2):
        for k in range(2 * m + 1, 2 * m + 6):
            assert B.a_coefficient(m, k, k, m) == HALF_I
            assert B.a_coefficient(k, k, m, m) == HALF_I
    with pytest.raises(ContractError):
        B.a_coefficient(1, 1, 1, 2)


@given(st.integers(0, 3), st.integers(0, 20), st.integers(0, 20))
def test_a_symmetric(m, j, k):
    l = j + k - m
    if l >= 0:
        assert B.a_coefficient(j, l, k, m) == B.a_coefficient(k, l, j, m)
        assert B.a_coefficient(j, l, k, m, dispersion=0.3) == B.a_coefficient(k, l, j, m, dispersion=0.3)


@pytest.mark.parametrize("m", [1, 2])
def test_a_supremum_is_half(m):
    N = 24
    vals = [abs(B.a_coefficient(j, j + k - m, k, m)) for j in range(N + 1) for k in range(N + 1)
            if j + k - m >= 0]
    assert max(vals) == 0.5


def test_low_block_is_zero_padded():
    m = 2
    for j in range(2 * m + 1):
        for k in range(2 * m + 1):
            if j + k - m >= 0:
                assert not B.a_coefficient(j, j + k - m, k, m)


def test_small_divisor_detected():
    # 1 - 2 (3-1)(3-1) D vanishes at D = 1/8
    rep = B.DivisorReport()
    with pytest.raises(SmallDivisorError) as exc:
        B.build_Fm(1, 6, dispersion=0.125, report=rep)
    assert exc.value.report.degenerate
    assert rep.to_dict()["min_abs_divisor"] < 1e-9


@pytest.mark.parametrize("m", [0, 1, 2])
def test_lie_derivative_identity(m):
    N = 16
    Fm = B.build_Fm(m, N)
    assert Fm.is_real and Fm.exact
    assert (poisson_bracket(Fm, P.l_m(m)) + P.n2_tilde(m, N)).is_zero()


@pytest.mark.parametrize("m", [0, 1, 2])
def test_remainder_support(m):
    N = 16
    R = B.R_m(m, N)
    assert R.support_modes() <= set(range(3 * m + 1))
    assert B.high_resonant_part(R, m).is_zero()


def test_general_dispersion_removes_high_resonances():
    D = 2 ** -0.5
    for m in (1, 2):
        rep = B.DivisorReport()
        R = B.R_m(m, 16, dispersion=D, Fm=B.build_Fm(m, 16, dispersion=D, report=rep))
        assert B.high_resonant_part(R, m).max_abs_coeff() < 1e-9
        assert not rep.degenerate


# ---- resonances ----

def test_order4_small():
    assert B.enumerate_resonances(4, 1) == sorted({(0, 0, 0, 0), (1, 1, 1, 1), (0, 0, 1, 1), (1, 1, 0, 0),
                                                   (0, 1, 1, 0), (1, 0, 0, 1)})
    assert B.enumerate_resonances(4, 4) == B.pairing_characterization(4)


def test_order6_has_nontrivial_tuples():
    allt, nontriv = B.enumerate_resonances(6, 6)
    assert nontriv
    for t in nontriv:
        assert t[0] - t[1] + t[2] - t[3] + t[4] - t[5] == 0
        assert t[0] ** 2 - t[1] ** 2 + t[2] ** 2 - t[3] ** 2 + t[4] ** 2 - t[5] ** 2 == 0
        assert t[4] != t[5]


def test_enumeration_limits():
    with pytest.raises(ContractError):
        B.enumerate_resonances(6, 30)
    with pytest.raises(ContractError):
        B.enumerate_resonances(5, 3)
