"""First three moments of work from the reduced master equation.

Two tracks share the co-evolution engine in :mod:`workmoments.lindblad`:

* ``moments_full`` integrates the Schrodinger-picture master equation with
  the full sinusoidal drive;
* ``moments_rwa`` works in the interaction picture of the bare Hamiltonian
  with counter-rotating drive terms dropped, which makes the generator and
  the power operator time independent. Each step is then an exact
  exponential of the generator.

Moments are reported in units of ``(hbar omega0)**n``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .densemath import matrix_exponential
from .lindblad import (
    MomentsIntegrands,
    generator_super,
    left_super,
    min_eigenvalues,
    right_super,
    run_coevolution,
    schrodinger_inputs,
)
from .exceptions import DomainError, NumericalError, UndefinedRatioError
from .model import SIGMA_X, ladder_operators, system_hamiltonian_stack, thermal_state, transition_rates

METHODS = ("full_numeric", "rwa_regression", "mcwf", "oracle")
_RESONANCE_TOL = 1e-12
_CHAINS = ("A1", "A2", "B1", "B2", "D")


@dataclass
class MomentsReport:
    """Work moments with the third-moment correction terms.

    ``W3`` always equals ``W3_0 + corr_C3_system + corr_cross + corr_SB``.
    Standard errors are only set for Monte Carlo estimates.
    """

    W1: float
    W2: float
    W3_0: float
    corr_C3_system: float
    corr_cross: float
    corr_SB: float
    method_tag: str
    stderr: tuple = (np.nan, np.nan, np.nan)
    times: np.ndarray = field(default=None, repr=False)
    series: dict = field(default=None, repr=False)
    W3: float = field(init=False)

    def __post_init__(self):
        if self.method_tag not in METHODS:
            raise ValueError(f"unknown method_tag {self.method_tag!r}")
        self.W3 = assemble_third_moment(self.W3_0, self.corr_C3_system, self.corr_cross, self.corr_SB)

    def as_row(self):
        return {
            "method": self.method_tag,
            "W1": self.W1,
            "W2": self.W2,
            "W3_0": self.W3_0,
            "corr_C3_sys": self.corr_C3_system,
            "corr_cross": self.corr_cross,
            "corr_SB": self.corr_SB,
            "W3": self.W3,
            "stderr1": self.stderr[0],
            "stderr2": self.stderr[1],
            "stderr3": self.stderr[2],
        }


def assemble_third_moment(w3_0, corr_c3, corr_cross, corr_sb):
    return w3_0 + corr_c3 + corr_cross + corr_sb


def third_moment_bath_correction(p, rho_traj, times=None):
    """Born-Markov estimate of the system+bath third-moment correction.

    ``(omega0 / 2) (Gamma_up + Gamma_down) * integral of dlambda/dt Im rho_eg``,
    evaluated with the trapezoid rule on the grid of ``rho_traj``.
    """
    times = p.time_grid() if times is None else times
    gd, gu = transition_rates(p)
    integrand = p.drive.derivative(times) * np.imag(rho_traj[:, 1, 0])
    return 0.5 * p.omega0 * (gu + gd) * np.trapezoid(integrand, times)


def third_moment_bath_correction_rwa(p, rho_i_traj, times=None):
    """Resonant RWA form of the bath correction from the interaction-picture
    state: ``(lambda0 omega0**2 / 4)(Gamma_up + Gamma_down) * integral Im rho^I_eg``.
    """
    _require_resonance(p)
    times = p.time_grid() if times is None else times
    gd, gu = transition_rates(p)
    integral = np.trapezoid(np.imag(rho_i_traj[:, 1, 0]), times)
    return 0.25 * p.lambda0 * p.omega0**2 * (gu + gd) * integral


def _require_resonance(p):
    if abs(p.drive_omega - p.omega0) > _RESONANCE_TOL * p.omega0:
        raise DomainError("RWA expressions require a resonant drive (drive_omega == omega0)")


def _cumulative(values, times):
    return cumulative_trapezoid(values, times, initial=0.0)


def moments_full(p):
    """Moments from the full master equation with the power-operator
    correlators evaluated by quantum regression."""
    times, maps, rho, power, c2 = schrodinger_inputs(p)
    integrands = run_coevolution(maps, rho, power, c2, times)
    hs = system_hamiltonian_stack(p, times)
    c3 = hs @ c2 - c2 @ hs
    c3_density = 0.25 * np.real(np.einsum("kab,kba->k", c3, rho))
    gd, gu = transition_rates(p)
    sb_density = 0.5 * p.omega0 * (gu + gd) * p.drive.derivative(times) * np.imag(rho[:, 1, 0])
    return _report(p, integrands, c3_density, sb_density, "full_numeric")


def rwa_operators(p):
    """Interaction-picture RWA Hamiltonian, power operator, ``C2`` and ``C3``.

    The resonant drive reduces to ``(lambda0 / 2i)(a - a_dag)`` and the power
    operator to ``lambda0 omega0 (a + a_dag) / 2``. The commutators follow
    from the Schrodinger-picture ones with rotating terms kept:
    ``C2 -> omega0 lambda0 omega0 (a_dag - a) / 2`` and ``C3 -> omega0**2 P``.
    """
    _require_resonance(p)
    a, ad = ladder_operators()
    h_i = (p.lambda0 / 2j) * (a - ad)
    power = 0.5 * p.lambda0 * p.omega0 * SIGMA_X
    c2 = 0.5 * p.lambda0 * p.omega0**2 * (ad - a)
    c3 = p.omega0**2 * power
    return h_i, power, c2, c3


def _trace_row(op):
    # row vector r with r @ vec(X) == Tr(op @ X) for row-major vec
    return np.asarray(op, dtype=complex).T.reshape(4)


def _augmented_rwa_generator(p):
    """Constant generator of the joint linear system
    ``(rho, A1, A2, B1, B2, D, I_W1, I_W2, I_W3_0, I_cross, I_C3, I_SB)``.

    Matrix blocks evolve with the RWA Liouvillian plus their regression
    sources; the six trailing scalars are running integrals whose real parts
    are the moment contributions.
    """
    h_i, power, c2, c3 = rwa_operators(p)
    gd, gu = transition_rates(p)
    liou = generator_super(h_i, gd, gu)
    m = np.zeros((30, 30), dtype=complex)
    blk = lambda i: slice(4 * i, 4 * i + 4)  # noqa: E731
    for i in range(6):
        m[blk(i), blk(i)] = liou
    m[blk(1), blk(0)] = left_super(power)
    m[blk(2), blk(0)] = right_super(power)
    m[blk(3), blk(1)] = left_super(power)
    m[blk(4), blk(2)] = left_super(power)
    m[blk(5), blk(0)] = left_super(c2)
    tp = _trace_row(power)
    m[24, blk(0)] = tp
    m[25, blk(1)] = 2 * tp
    m[26, blk(3)] = 3 * tp
    m[26, blk(4)] = 3 * tp
    m[27, blk(5)] = 1.5 * tp
    m[28, blk(0)] = 0.25 * _trace_row(c3)
    # Im rho_eg = (rho_eg - rho_ge) / 2i for Hermitian rho
    sb = 0.25 * p.lambda0 * p.omega0**2 * (gu + gd)
    m[29, 2] = sb / 2j
    m[29, 1] = -sb / 2j
    return m


def rwa_pass(p, rho0=None):
    """Co-evolve the RWA state, regression chains and moment integrals.

    The joint generator is time independent, so each grid step applies its
    exact exponential. Returns ``(times, rho_i, integrals)`` where
    ``integrals`` has shape ``(6, N+1)``.
    """
    times = p.time_grid()
    rho0 = thermal_state(p) if rho0 is None else np.asarray(rho0, dtype=complex)
    step = matrix_exponential(_augmented_rwa_generator(p) * p.dt)
    y = np.zeros(30, dtype=complex)
    y[:4] = rho0.reshape(4)
    out = np.empty((p.steps + 1, 30), dtype=complex)
    out[0] = y
    for k in range(p.steps):
        y = step @ y
        out[k + 1] = y
    rho = out[:, :4].reshape(-1, 2, 2)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    bad = np.nonzero(min_eigenvalues(rho) < -1e-6)[0]
    if bad.size:
        raise NumericalError(f"positivity lost at step {int(bad[0])}")
    return times, rho, out[:, 24:].real.T, {n: out[-1, 4 * i + 4 : 4 * i + 8].reshape(2, 2) for i, n in enumerate(_CHAINS)}


def rwa_state_trajectory(p, rho0=None):
    """Interaction-picture density matrices on the time grid."""
    return rwa_pass(p, rho0)[1]


def moments_rwa(p):
    """Moments with the additional rotating-wave approximation of the drive."""
    times, rho, integrals, chains = rwa_pass(p)
    integrands = MomentsIntegrands(
        W1=float(integrals[0, -1]),
        W2=float(integrals[1, -1]),
        W3_0=float(integrals[2, -1]),
        W3_cross=float(integrals[3, -1]),
        times=times,
        rho=rho,
        series=dict(zip(("W1", "W2", "W3_0", "W3_cross"), integrals[:4])),
        chains=chains,
    )
    return _report(p, integrands, integrals[4], integrals[5], "rwa_regression", cumulative=True)


def _report(p, integrands, c3, sb, tag, cumulative=False):
    times = integrands.times
    series = dict(integrands.series)
    series["corr_C3_system"] = c3 if cumulative else _cumulative(c3, times)
    series["corr_SB"] = sb if cumulative else _cumulative(sb, times)
    series["W3"] = assemble_third_moment(
        series["W3_0"], series["corr_C3_system"], series["W3_cross"], series["corr_SB"]
    )
    w = p.omega0
    report = MomentsReport(
        W1=integrands.W1 / w,
        W2=integrands.W2 / w**2,
        W3_0=integrands.W3_0 / w**3,
        corr_C3_system=float(series["corr_C3_system"][-1]) / w**3,
        corr_cross=integrands.W3_cross / w**3,
        corr_SB=float(series["corr_SB"][-1]) / w**3,
        method_tag=tag,
        times=times,
        series=series,
    )
    return report


def fdt_ratio(p, report=None):
    """``<W^2>_RWA / <W>_RWA`` in units of ``hbar omega0``."""
    report = moments_rwa(p) if report is None else report
    # drive-work scale; below this W1 is roundoff and the ratio is 0/0
    scale = abs(p.lambda0) * p.drive_omega * p.tau / p.omega0
    if not np.isfinite(report.W1) or abs(report.W1) <= 1e-10 * max(scale, 1e-300):
        raise UndefinedRatioError("first moment vanishes; the FDT ratio is undefined")
    return report.W2 / report.W1


def fdt_taylor(p):
    """Expansion of the FDT ratio to leading orders in drive and coupling."""
    bw = p.beta
    tau = p.tau * p.omega0
    g = p.gamma_down / p.omega0
    lam = p.lambda0 / p.omega0
    boltz = np.exp(-bw)
    base = 1.0 / np.tanh(bw / 2)
    return base + g * lam**2 * tau**3 / 60.0 * (1 - boltz) * (1 - g * tau / 6.0 * (1 + boltz))
