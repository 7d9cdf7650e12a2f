import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from workmoments.exceptions import DomainError
from workmoments.model import (
    SIGMA_X,
    SystemParams,
    ladder_operators,
    power_operator,
    system_hamiltonian,
    thermal_state,
    transition_rates,
)


def test_defaults_and_tau():
    p = SystemParams()
    assert (p.beta, p.lambda0, p.drive_omega, p.cycles, p.steps) == (2.0, 0.05, 1.0, 10.0, 10_000)
    assert p.tau == pytest.approx(20 * math.pi)
    assert p.time_grid()[-1] == pytest.approx(p.tau)
    assert len(p.time_grid()) == p.steps + 1


@pytest.mark.parametrize(
    "kw",
    [dict(omega0=0.0), dict(gamma_down=-0.1), dict(drive_omega=0.0), dict(cycles=0.0), dict(steps=1),
     dict(cycles=10.3), dict(lambda0=float("nan")), dict(beta=-1.0)],
)
def test_invalid_params(kw):
    with pytest.raises(DomainError):
        SystemParams(**kw)


def test_offgrid_flag_allows_arbitrary_duration():
    p = SystemParams(cycles=10.3, offgrid_tau=True)
    assert not p.half_integer_cycles


def test_drive_endpoints():
    for cycles in (1, 2.5, 10, 37.5):
        p = SystemParams(cycles=cycles, lambda0=0.3, drive_omega=1.7)
        assert p.drive.value(0.0) == 0.0
        assert abs(p.drive.value(p.tau)) <= 1e-12 * p.lambda0 * max(1, cycles)


def test_ladder_operators():
    a, ad = ladder_operators()
    assert np.array_equal(a @ a, np.zeros((2, 2)))
    assert np.array_equal(ad @ a, np.diag([0, 1]))
    assert np.array_equal(a + ad, SIGMA_X)
    assert np.array_equal(a @ np.array([0, 1]), np.array([1, 0]))
    assert np.array_equal(ad, a.conj().T)


def test_hamiltonian_examples():
    p = SystemParams()
    assert np.array_equal(system_hamiltonian(p, 0.0), np.diag([0.0, 1.0]))
    h = system_hamiltonian(p, math.pi / 2)
    assert h[0, 1] == pytest.approx(0.05) and h[1, 0] == pytest.approx(0.05)
    assert np.allclose(system_hamiltonian(p, p.tau), np.diag([0.0, 1.0]), atol=1e-12)


def test_power_operator_examples():
    p = SystemParams(drive_omega=1.3, cycles=4)
    assert np.allclose(power_operator(p, 0.0), p.lambda0 * p.drive_omega * SIGMA_X)
    assert np.allclose(power_operator(p, math.pi / (2 * p.drive_omega)), 0.0, atol=1e-15)
    t = np.linspace(0, p.tau, 20001)
    assert abs(np.trapezoid(p.drive.derivative(t), t)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 60), st.floats(0.001, 0.5), st.floats(0.2, 3.0))
def test_power_is_time_derivative(t, lam, w):
    p = SystemParams(lambda0=lam, drive_omega=w, cycles=1)
    dt = 1e-4
    fd = (system_hamiltonian(p, t + dt) - system_hamiltonian(p, t - dt)) / (2 * dt)
    assert np.abs(fd - power_operator(p, t)).max() <= 1e-6
    h = system_hamiltonian(p, t)
    assert np.array_equal(h, h.conj().T)


def test_transition_rates():
    assert transition_rates(SystemParams(gamma_down=0.0)) == (0.0, 0.0)
    gd, gu = transition_rates(SystemParams(gamma_down=0.01))
    assert gu == pytest.approx(0.01 * math.exp(-2.0), rel=1e-14)
    assert gu == pytest.approx(0.0013534, abs=5e-8)
    assert transition_rates(SystemParams(beta=math.inf))[1] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 40), st.floats(0, 1))
def test_detailed_balance_ratio(beta, gd):
    gdown, gup = transition_rates(SystemParams(beta=beta, gamma_down=gd))
    if gd > 0:
        assert gup / gdown == pytest.approx(math.exp(-beta), rel=1e-14)


def test_thermal_state():
    assert np.allclose(thermal_state(SystemParams(beta=math.inf)), np.diag([1.0, 0.0]))
    assert np.allclose(thermal_state(SystemParams(beta=0.0)), np.diag([0.5, 0.5]))
    rho = thermal_state(SystemParams(beta=2.0))
    assert np.allclose(np.diag(rho).real, [1 / (1 + math.exp(-2)), math.exp(-2) / (1 + math.exp(-2))], rtol=1e-15)
    assert np.allclose(np.diag(rho).real, [0.880797, 0.119203], atol=5e-7)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
