"""Lindblad dynamics of the reduced two-level system and the
quantum-regression co-evolution of multi-time power correlators.

Time integration uses classical RK4 on a fixed grid. For a linear equation
the RK4 step is itself a linear map, so every step is precomputed as a 4x4
superoperator acting on row-major vectorised matrices and shared by the
state and by all correlation chains.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import NumericalError, ShapeError
from .model import (
    PROJ_E,
    PROJ_G,
    ladder_operators,
    power_operator_stack,
    system_hamiltonian,
    system_hamiltonian_stack,
    thermal_state,
    transition_rates,
)

_I2 = np.eye(2, dtype=complex)
_A, _AD = ladder_operators()


def left_super(a):
    """Superoperator of ``X -> a X`` (stacks allowed)."""
    return np.einsum("...ab,cd->...acbd", a, _I2).reshape(a.shape[:-2] + (4, 4))


def right_super(b):
    """Superoperator of ``X -> X b`` (stacks allowed)."""
    return np.einsum("ab,...dc->...acbd", _I2, b).reshape(b.shape[:-2] + (4, 4))


def dissipator_super(gamma_down, gamma_up):
    d = np.zeros((4, 4), dtype=complex)
    for rate, jump in ((gamma_down, _A), (gamma_up, _AD)):
        jj = jump.conj().T @ jump
        d += rate * (
            left_super(jump) @ right_super(jump.conj().T)
            - 0.5 * left_super(jj)
            - 0.5 * right_super(jj)
        )
    return d


def generator_super(hamiltonian, gamma_down, gamma_up):
    """Liouvillian ``-i[H, .] + D`` as a 4x4 matrix (stacks of H allowed)."""
    return -1j * (left_super(hamiltonian) - right_super(hamiltonian)) + dissipator_super(
        gamma_down, gamma_up
    )


def lindblad_apply(p, t, x):
    """Evaluate the Lindblad right-hand side ``L_t[x]`` for any 2x2 ``x``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 matrix, got {x.shape}")
    h = system_hamiltonian(p, t)
    gd, gu = transition_rates(p)
    return (
        -1j * (h @ x - x @ h)
        + gd * (x[1, 1] * PROJ_G - 0.5 * (x @ PROJ_E + PROJ_E @ x))
        + gu * (x[0, 0] * PROJ_E - 0.5 * (x @ PROJ_G + PROJ_G @ x))
    )


def rk4_step_maps(generator_at, t0, t1, n_steps):
    """Stack of RK4 propagators for ``dX/dt = L(t) X`` on a uniform grid.

    ``generator_at`` maps an array of times to a stack of square generators.
    """
    h = (t1 - t0) / n_steps
    starts = t0 + h * np.arange(n_steps)
    l1 = generator_at(starts)
    l2 = generator_at(starts + 0.5 * h)
    l3 = generator_at(starts + h)
    eye = np.eye(l1.shape[-1], dtype=complex)
    k1 = l1
    k2 = l2 @ (eye + 0.5 * h * k1)
    k3 = l2 @ (eye + 0.5 * h * k2)
    k4 = l3 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def schrodinger_step_maps(p, t0=0.0, t1=None, n_steps=None):
    t1 = p.tau if t1 is None else t1
    n_steps = p.steps if n_steps is None else n_steps
    gd, gu = transition_rates(p)

    def generator_at(times):
        return generator_super(system_hamiltonian_stack(p, times), gd, gu)

    return rk4_step_maps(generator_at, t0, t1, n_steps)


def min_eigenvalues(rho):
    """Smallest eigenvalue of each Hermitian 2x2 matrix in a stack."""
    a = rho[..., 0, 0].real
    d = rho[..., 1, 1].real
    b = np.abs(rho[..., 0, 1])
    return 0.5 * (a + d - np.sqrt((a - d) ** 2 + 4 * b**2))


def state_trajectory(step_maps, rho0, n_steps=None, positivity_tol=1e-6):
    """Density matrices on every grid point, shape ``(N+1, 2, 2)``.

    Raises
    ------
    NumericalError
        If any state has an eigenvalue below ``-positivity_tol``; the message
        names the first offending step.

    A single map (stack of length one) is reused for ``n_steps`` steps.
    """
    step_maps = np.ascontiguousarray(step_maps, dtype=complex)
    if step_maps.ndim == 2:
        raise ShapeError("step_maps must be a stack; use [phi] for a constant map")
    rho0 = np.asarray(rho0, dtype=complex)
    n_steps = step_maps.shape[0] if n_steps is None else n_steps
    traj = _kernels.state_trajectory_kernel(step_maps, rho0.reshape(4), n_steps)
    traj = traj.reshape(-1, 2, 2)
    bad = np.nonzero(min_eigenvalues(traj) < -positivity_tol)[0]
    if bad.size:
        k = int(bad[0])
        raise NumericalError(f"positivity lost at step {k}: min eigenvalue {min_eigenvalues(traj[k]):.3e}")
    return traj


def propagate_state(p, rho0, t0, t1, substeps):
    """Integrate the Lindblad equation from ``t0`` to ``t1``."""
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if t1 == t0:
        return np.array(rho0, dtype=complex)
    maps = schrodinger_step_maps(p, t0, t1, substeps)
    return state_trajectory(maps, rho0)[-1]


@dataclass
class MomentsIntegrands:
    """Result of one co-evolution pass.

    ``series`` holds cumulative integrals on the time grid, so
    ``series["W2"][k]`` is the second moment for a protocol stopped at
    ``times[k]``.
    """

    W1: float
    W2: float
    W3_0: float
    W3_cross: float
    times: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    series: dict = field(repr=False)
    chains: dict = field(repr=False)


_SERIES = ("W1", "W2", "W3_0", "W3_cross")
_CHAINS = ("A1", "A2", "B1", "B2", "D")


def run_coevolution(step_maps, rho, power, c2, times):
    """Generic co-evolution engine over precomputed inputs.

    Parameters
    ----------
    step_maps : (N, 4, 4) or (1, 4, 4) array
        Per-step propagators (a single map is reused when the generator is
        time independent).
    rho : (N+1, 2, 2) array
        State on the grid, as produced by :func:`state_trajectory`.
    power, c2 : (N+1, 2, 2) arrays
        Power operator and its commutator with the Hamiltonian on the grid.
    """
    h = float(times[1] - times[0])
    n1 = rho.shape[0]
    cum, val = _kernels.coevolve_kernel(
        np.ascontiguousarray(step_maps, dtype=complex),
        np.ascontiguousarray(rho.reshape(n1, 4)),
        np.ascontiguousarray(np.broadcast_to(power, (n1, 2, 2)).reshape(n1, 4), dtype=complex),
        np.ascontiguousarray(np.broadcast_to(c2, (n1, 2, 2)).reshape(n1, 4), dtype=complex),
        h,
    )
    if not np.all(np.isfinite(cum)):
        raise NumericalError("non-finite value in correlation accumulators")
    series = dict(zip(_SERIES, cum))
    chains = {name: val[i].reshape(2, 2).copy() for i, name in enumerate(_CHAINS)}
    return MomentsIntegrands(
        W1=float(cum[0, -1]),
        W2=float(cum[1, -1]),
        W3_0=float(cum[2, -1]),
        W3_cross=float(cum[3, -1]),
        times=np.asarray(times),
        rho=rho,
        series=series,
        chains=chains,
    )


def schrodinger_inputs(p):
    """Grid, step maps, state trajectory, power operator and ``[H_S, P]``."""
    times = p.time_grid()
    maps = schrodinger_step_maps(p)
    rho = state_trajectory(maps, thermal_state(p))
    hs = system_hamiltonian_stack(p, times)
    power = power_operator_stack(p, times)
    c2 = hs @ power - power @ hs
    return times, maps, rho, power, c2


def coevolve_correlations(p):
    """Work-moment integrands of the full (non-RWA) master equation."""
    times, maps, rho, power, c2 = schrodinger_inputs(p)
    trace_err = np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0))
    if trace_err > 1e-6:
        raise NumericalError(f"trace drift {trace_err:.2e}; grid too coarse")
    return run_coevolution(maps, rho, power, c2, times)


def propagator_table(step_maps, n_steps):
    """All interval propagators ``V[k, j] = Phi_{k-1} ... Phi_j`` (k >= j)."""
    if step_maps.shape[0] == 1:
        step_maps = np.broadcast_to(step_maps, (n_steps, 4, 4))
    table = np.zeros((n_steps + 1, n_steps + 1, 4, 4), dtype=complex)
    for j in range(n_steps + 1):
        table[j, j] = np.eye(4)
        for k in range(j + 1, n_steps + 1):
            table[k, j] = step_maps[k - 1] @ table[k - 1, j]
    return table


def nested_loop_regression(step_maps, rho, power, c2, times):
    """Reference evaluation by explicit time-ordered sums over correlators.

    Every two- and three-time correlation function is formed on the grid from
    the interval propagators and combined with nested trapezoid weights.
    Cost is cubic in the grid size; intended for N <= 100.
    """
    n = rho.shape[0] - 1
    h = float(times[1] - times[0])
    table = propagator_table(np.asarray(step_maps), n)
    vec = lambda m: m.reshape(-1, 4)  # noqa: E731
    rho_v = vec(rho)
    P = np.broadcast_to(power, (n + 1, 2, 2))
    C2 = np.broadcast_to(c2, (n + 1, 2, 2))
    left_P = left_super(P)
    right_P = right_super(P)

    def weights(k):
        w = np.full(k + 1, h)
        w[0] = w[-1] = 0.5 * h
        return w if k > 0 else np.zeros(1)

    outer = weights(n)

    def tr(op, x):
        return np.einsum("ab,...ba->...", op, x.reshape(x.shape[:-1] + (2, 2)))

    # prop_src[j, l] = V(j, l)[S_l] for the three single-insertion sources
    left_src = np.einsum("lab,lb->la", left_P, rho_v)
    right_src = np.einsum("lab,lb->la", right_P, rho_v)
    c2_src = np.einsum("lab,lb->la", left_super(C2), rho_v)
    W1 = W2 = W30 = cross = 0.0
    for k in range(n + 1):
        W1 += outer[k] * tr(P[k], rho_v[k]).real
        wk = weights(k)
        for j in range(k + 1):
            vkj = table[k, j]
            W2 += outer[k] * wk[j] * 2 * tr(P[k], vkj @ left_src[j]).real
            cross += outer[k] * wk[j] * 1.5 * tr(P[k], vkj @ c2_src[j]).real
            wj = weights(j)
            ls = np.einsum("lab,lb->la", table[j, : j + 1], left_src[: j + 1])
            rs = np.einsum("lab,lb->la", table[j, : j + 1], right_src[: j + 1])
            inner = np.einsum("ab,lb->la", vkj @ left_P[j], ls + rs)
            W30 += outer[k] * wk[j] * 3 * np.dot(wj, tr(P[k], inner).real)
    return {"W1": W1, "W2": W2, "W3_0": W30, "W3_cross": cross}
