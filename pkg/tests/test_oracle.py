import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from szego_lab.errors import ContractError
from szego_lab.oracle import (omega, oracle_coeffs, oracle_field, oracle_hs_norm, oracle_state,
                              t_delta)
from szego_lab.spectral import conserved_quantities, cubic_nonlinearity, hs_dot_norm, sobolev_norm

deltas = st.floats(0.05, 0.95)

# reference values from a 30-digit evaluation of the closed-form series
# sum (1+k^2) r^{k-1} = 1/(1-r) + (1+r)/(1-r)^3
T_DELTA_03 = 5.178058635064878257
H1_AT_T_DELTA_03 = 9.538285427103179789


def test_t_delta_value():
    assert t_delta(0.3) == pytest.approx(T_DELTA_03, rel=1e-15)
    assert t_delta(0.3) == pytest.approx(math.pi / (0.3 * math.sqrt(4.09)), rel=1e-15)


@given(deltas)
def test_t_delta_quarter_period(d):
    assert omega(d) * t_delta(d) == pytest.approx(math.pi / 2, rel=1e-14)


@given(deltas, deltas)
def test_t_delta_decreasing(a, b):
    if a < b:
        assert t_delta(a) > t_delta(b)


@pytest.mark.parametrize("d", [0.0, 1.0, -0.2, 1.5])
def test_delta_domain(d):
    with pytest.raises(ContractError):
        t_delta(d)


def test_initial_data():
    c = oracle_coeffs(0.3, 0.0, 8)
    expect = np.zeros(9, complex)
    expect[0], expect[1] = 0.3, 1.0
    np.testing.assert_allclose(c, expect, atol=1e-15)


def test_h1_at_t_delta():
    assert oracle_hs_norm(0.3, t_delta(0.3), 1.0) == pytest.approx(H1_AT_T_DELTA_03, rel=1e-11)


@given(deltas, st.floats(0, 30))
def test_conserved_in_closed_form(d, t):
    st_ = oracle_state(d, t)
    r = abs(st_.p) ** 2
    Q = abs(st_.b) ** 2 + abs(st_.lead) ** 2 / (1 - r)
    assert Q == pytest.approx(1 + d * d, rel=1e-10)
    # Hdot^{1/2} norm is 1 for all t
    assert oracle_hs_norm(d, t, 0.5, homogeneous=True) == pytest.approx(1.0, rel=1e-9)


def test_truncated_field_and_tail():
    of = oracle_field(0.3, t_delta(0.3), 256)
    full = oracle_hs_norm(0.3, t_delta(0.3), 1.0)
    assert sobolev_norm(of.field, 1.0) ** 2 + of.tail_h1**2 == pytest.approx(full**2, rel=1e-10)
    # at N = 2048 the tail is negligible
    assert oracle_field(0.3, t_delta(0.3), 2048).tail_h1 < 1e-6


def test_pde_residual_second_order():
    d, t, N = 0.3, 1.0, 128
    def res(h):
        dv = (oracle_coeffs(d, t + h, N) - oracle_coeffs(d, t - h, N)) / (2 * h)
        rhs = -1j * cubic_nonlinearity(oracle_coeffs(d, t, N)).coeffs
        return np.linalg.norm(dv - rhs)
    r1, r2 = res(1e-2), res(5e-3)
    assert r1 / r2 == pytest.approx(4.0, rel=0.05)


def test_momentum_constant_on_truncation():
    d = 0.3
    I0 = conserved_quantities(oracle_coeffs(d, 0.0, 4096)).I
    I1 = conserved_quantities(oracle_coeffs(d, 3.0, 4096)).I
    assert I1 == pytest.approx(I0, rel=1e-10)
    assert hs_dot_norm(oracle_coeffs(d, 3.0, 4096), 0.5) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("s", [1.0, 2.0])
def test_norm_peaks_at_t_delta(s):
    d = 0.2
    td = t_delta(d)
    peak = oracle_hs_norm(d, td, s)
    grid = np.linspace(0, td, 41)
    vals = [oracle_hs_norm(d, t, s) for t in grid]
    assert max(vals) <= peak * (1 + 1e-12)
    assert np.all(np.diff(vals) >= -1e-12 * peak)  # monotone on [0, t^delta]


@pytest.mark.parametrize("s", [1.0, 2.0])
def test_daisy_exponent(s):
    ds = np.array([0.4, 0.2, 0.1])
    norms = [oracle_hs_norm(d, t_delta(d), s) for d in ds]
    slope = np.polyfit(np.log(ds), np.log(norms), 1)[0]
    assert slope == pytest.approx(1 - 2 * s, abs=0.15)
