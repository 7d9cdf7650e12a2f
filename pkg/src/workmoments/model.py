"""Driven two-level system: parameters, drive, operators and rates.

Units are reduced throughout: hbar = 1, energies in units of the level
splitting, rates and frequencies in the same unit, times in its inverse.
Basis ordering is ``(|g>, |e>)``.
"""

from dataclasses import dataclass, fields, replace

import numpy as np

from .exceptions import DomainError


@dataclass(frozen=True)
class SystemParams:
    """Physical configuration of the driven, damped two-level system.

    Parameters
    ----------
    omega0 : float
        Level splitting (sets the energy unit).
    beta : float
        Dimensionless inverse temperature ``beta * hbar * omega0``.
    gamma_down : float
        Emission rate.
    lambda0 : float
        Drive amplitude.
    drive_omega : float
        Drive angular frequency.
    cycles : float
        Drive duration in periods; integer or half-integer unless
        ``offgrid_tau`` is set.
    steps : int
        Number of time steps on ``[0, tau]``.
    offgrid_tau : bool
        Allow arbitrary durations. Final measurements then use the
        instantaneous eigenbasis of the system Hamiltonian.
    """

    omega0: float = 1.0
    beta: float = 2.0
    gamma_down: float = 0.01
    lambda0: float = 0.05
    drive_omega: float = 1.0
    cycles: float = 10.0
    steps: int = 10_000
    offgrid_tau: bool = False

    def __post_init__(self):
        for name in ("omega0", "gamma_down", "lambda0", "drive_omega", "cycles"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"{name}={getattr(self, name)!r} must be finite")
        checks = [
            ("omega0", self.omega0 > 0),
            ("beta", self.beta >= 0),
            ("gamma_down", self.gamma_down >= 0),
            ("drive_omega", self.drive_omega > 0),
            ("cycles", self.cycles > 0),
            ("steps", int(self.steps) == self.steps and self.steps >= 2),
        ]
        for name, ok in checks:
            if not ok:
                raise DomainError(f"{name}={getattr(self, name)!r} is out of range")
        object.__setattr__(self, "steps", int(self.steps))
        if not self.offgrid_tau and not self.half_integer_cycles:
            raise DomainError(
                f"cycles={self.cycles!r} is not an integer or half-integer; set offgrid_tau to allow it"
            )

    @property
    def half_integer_cycles(self):
        return abs(2 * self.cycles - round(2 * self.cycles)) < 1e-12

    @property
    def tau(self):
        return self.cycles * 2 * np.pi / self.drive_omega

    @property
    def dt(self):
        return self.tau / self.steps

    def time_grid(self):
        return np.linspace(0.0, self.tau, self.steps + 1)

    @property
    def drive(self):
        return DriveProtocol(self.lambda0, self.drive_omega)

    def replace(self, **changes):
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class DriveProtocol:
    """Sinusoidal drive ``lambda(t) = amplitude * sin(frequency * t)``."""

    amplitude: float
    frequency: float

    def value(self, t):
        return self.amplitude * np.sin(self.frequency * np.asarray(t, dtype=float))

    def derivative(self, t):
        return self.amplitude * self.frequency * np.cos(self.frequency * np.asarray(t, dtype=float))


def ladder_operators():
    """Return ``(a, a_dag)`` with ``a = |g><e|`` and ``a_dag = |e><g|``."""
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    return a, a.conj().T.copy()


_A, _AD = ladder_operators()
SIGMA_X = _A + _AD
NUMBER = _AD @ _A
PROJ_G = np.diag([1.0, 0.0]).astype(complex)
PROJ_E = np.diag([0.0, 1.0]).astype(complex)


def bare_hamiltonian(p):
    return p.omega0 * NUMBER


def system_hamiltonian(p, t):
    """``H_S(t) = omega0 a^dag a + lambda(t) (a + a^dag)``."""
    return p.omega0 * NUMBER + float(p.drive.value(t)) * SIGMA_X


def power_operator(p, t):
    """Time derivative of the Hamiltonian, ``dlambda/dt (a + a^dag)``."""
    return float(p.drive.derivative(t)) * SIGMA_X


def system_hamiltonian_stack(p, times):
    lam = p.drive.value(times)
    return p.omega0 * NUMBER[None] + lam[:, None, None] * SIGMA_X[None]


def power_operator_stack(p, times):
    return p.drive.derivative(times)[:, None, None] * SIGMA_X[None]


def transition_rates(p):
    """Emission and absorption rates obeying detailed balance."""
    if p.gamma_down < 0:
        raise DomainError("gamma_down must be nonnegative")
    return p.gamma_down, p.gamma_down * np.exp(-p.beta)


def thermal_populations(beta):
    p_g = 1.0 / (1.0 + np.exp(-beta))
    return p_g, 1.0 - p_g


def thermal_state(p):
    """Gibbs state of the undriven system, diagonal in ``(|g>, |e>)``."""
    p_g, p_e = thermal_populations(p.beta)
    return np.diag([p_g, p_e]).astype(complex)
