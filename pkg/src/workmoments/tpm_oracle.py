"""Exact two-point-measurement laboratory on a small closed system.

The driven two-level system is coupled to a few truncated bosonic modes and
the total system is propagated unitarily. This gives the joint distribution
of the two energy measurements, the generating function ``G(u)`` by two
independent routes, the commuting-Hamiltonian generating function
``G0(u)``, and the commutator correction integrals that separate their third
moments.

By default both measurements use the total Hamiltonian (``measurement =
'total'``); ``'bare'`` measures ``H_S + H_B`` instead, neglecting the
interaction energy.
"""

from dataclasses import dataclass, field

import numpy as np

from .densemath import MAX_DIM, commutator, hermitian_eigensystem, hermitian_expm, kron, matrix_exponential
from .exceptions import DomainError, NumericalError, SizeError, StepSizeError
from .model import NUMBER, SIGMA_X, SystemParams, ladder_operators

CLUSTER_TOL = 1e-9
UNITARITY_TOL = 1e-8
_CHUNK = 1024
_GAUSS = np.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class TotalSystemModel:
    """Two-level system plus ``n_modes`` bosonic modes truncated at ``n_max``.

    ``mode_freqs`` and ``couplings`` accept scalars (broadcast to all modes)
    or sequences of length ``n_modes``. Couplings may be complex.
    """

    system: SystemParams = field(default_factory=SystemParams)
    n_modes: int = 1
    n_max: int = 3
    mode_freqs: object = 1.0
    couplings: object = 0.02
    coupling_form: str = "full"
    measurement: str = "total"
    steps: int = None

    def __post_init__(self):
        if not 1 <= self.n_modes <= 3:
            raise DomainError(f"n_modes must be 1..3, got {self.n_modes}")
        if self.n_max < 1:
            raise DomainError("n_max must be at least 1")
        if self.dim > MAX_DIM:
            raise SizeError(f"total dimension {self.dim} exceeds {MAX_DIM}")
        freqs = np.broadcast_to(np.asarray(self.mode_freqs, dtype=float), (self.n_modes,))
        if np.any(~np.isfinite(freqs)) or np.any(freqs <= 0):
            raise DomainError("mode frequencies must be positive")
        np.broadcast_to(np.asarray(self.couplings, dtype=complex), (self.n_modes,))
        if self.coupling_form not in ("full", "rwa"):
            raise DomainError(f"coupling_form must be 'full' or 'rwa', got {self.coupling_form!r}")
        if self.measurement not in ("total", "bare"):
            raise DomainError(f"measurement must be 'total' or 'bare', got {self.measurement!r}")
        if self.steps is not None and self.steps < 2:
            raise DomainError("steps must be at least 2")

    @property
    def dim(self):
        return 2 * (self.n_max + 1) ** self.n_modes

    @property
    def freqs(self):
        return np.broadcast_to(np.asarray(self.mode_freqs, dtype=float), (self.n_modes,)).copy()

    @property
    def coupling_array(self):
        return np.broadcast_to(np.asarray(self.couplings, dtype=complex), (self.n_modes,)).copy()

    @property
    def n_steps(self):
        return self.system.steps if self.steps is None else int(self.steps)


def _embed(m, op, slot):
    """Place ``op`` on tensor factor ``slot`` (0 is the two-level system)."""
    dims = [2] + [m.n_max + 1] * m.n_modes
    out = np.eye(1, dtype=complex)
    for k, d in enumerate(dims):
        out = kron(out, op if k == slot else np.eye(d, dtype=complex))
    return out


class _Operators:
    """Static pieces of ``H(t) = H_static + lambda(t) X``."""

    def __init__(self, m):
        p = m.system
        b = np.diag(np.sqrt(np.arange(1, m.n_max + 1)), 1).astype(complex)
        a, ad = ladder_operators()
        self.h_sys = p.omega0 * _embed(m, NUMBER, 0)
        self.drive_op = _embed(m, SIGMA_X, 0)
        self.h_bath = np.zeros((m.dim, m.dim), dtype=complex)
        self.h_int = np.zeros_like(self.h_bath)
        for k, (w, g) in enumerate(zip(m.freqs, m.coupling_array)):
            bk = _embed(m, b, k + 1)
            self.h_bath += w * bk.conj().T @ bk
            if m.coupling_form == "full":
                self.h_int += _embed(m, SIGMA_X, 0) @ (g * bk.conj().T + np.conj(g) * bk)
            else:
                self.h_int += g * _embed(m, a, 0) @ bk.conj().T + np.conj(g) * _embed(m, ad, 0) @ bk
        self.h_static = self.h_sys + self.h_bath + self.h_int
        self.comm = commutator(self.drive_op, self.h_static)


def build_total_hamiltonian(m, t):
    """``H(t) = H_S(t) + H_B + H_C`` on the full tensor-product space."""
    ops = _Operators(m)
    return ops.h_static + float(m.system.drive.value(t)) * ops.drive_op


def measurement_hamiltonian(m, t, ops=None):
    ops = _Operators(m) if ops is None else ops
    lam = float(m.system.drive.value(t))
    h = ops.h_static if m.measurement == "total" else ops.h_sys + ops.h_bath
    return h + lam * ops.drive_op


def _step_unitaries(m, ops, s, k0, k1):
    """Fourth-order Magnus steps ``k0..k1-1`` of ``dV/dt = -i(H - s dH/dt)V``."""
    p = m.system
    h = p.tau / m.n_steps
    starts = h * np.arange(k0, k1)
    t1 = starts + (0.5 - _GAUSS) * h
    t2 = starts + (0.5 + _GAUSS) * h
    mu1 = p.drive.value(t1) - s * p.drive.derivative(t1)
    mu2 = p.drive.value(t2) - s * p.drive.derivative(t2)
    kmat = (
        h * ops.h_static[None]
        + (0.5 * h * (mu1 + mu2))[:, None, None] * ops.drive_op[None]
        - 1j * (np.sqrt(3.0) * h * h / 12.0) * (mu2 - mu1)[:, None, None] * ops.comm[None]
    )
    return hermitian_expm(kmat)


def _ordered_product(stack):
    """``M[n-1] @ ... @ M[1] @ M[0]`` by pairwise reduction."""
    while stack.shape[0] > 1:
        odd = stack.shape[0] % 2
        paired = stack[1 : stack.shape[0] - odd : 2] @ stack[0 : stack.shape[0] - odd : 2]
        stack = np.concatenate([paired, stack[-1:]]) if odd else paired
    return stack[0]


def _restore_unitarity(u):
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def unitarity_residual(u):
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def time_ordered_propagator(m, s=0.0, ops=None):
    """Propagator of ``H(t) - s dH/dt`` over ``[0, tau]``; ``s=0`` gives ``U``."""
    ops = _Operators(m) if ops is None else ops
    u = np.eye(m.dim, dtype=complex)
    for k0 in range(0, m.n_steps, _CHUNK):
        k1 = min(k0 + _CHUNK, m.n_steps)
        u = _ordered_product(_step_unitaries(m, ops, s, k0, k1)) @ u
    u = _restore_unitarity(u)
    residual = unitarity_residual(u)
    if residual > UNITARITY_TOL:
        raise NumericalError(f"propagator unitarity residual {residual:.2e} exceeds {UNITARITY_TOL}")
    return u


def _clusters(energies, tol=CLUSTER_TOL):
    """Index groups of sorted eigenvalues closer than ``tol`` to a neighbour."""
    groups = [[0]]
    for i in range(1, len(energies)):
        if energies[i] - energies[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


@dataclass
class MeasurementBasis:
    energies: np.ndarray
    vectors: np.ndarray
    levels: np.ndarray
    groups: list

    @classmethod
    def of(cls, h, scale=1.0):
        w, v = hermitian_eigensystem(h)
        groups = _clusters(w, CLUSTER_TOL * scale)
        levels = np.array([w[g].mean() for g in groups])
        return cls(w, v, levels, groups)

    def projector(self, j):
        v = self.vectors[:, self.groups[j]]
        return v @ v.conj().T

    def cluster_weights(self, rho):
        """Probability of each energy cluster in state ``rho``."""
        diag = np.real(np.einsum("ij,ik,kj->j", self.vectors.conj(), rho, self.vectors))
        return np.array([diag[g].sum() for g in self.groups])


def initial_state(m, ops=None):
    """Thermal system ⊗ thermal modes, all at the system's ``beta``."""
    ops = _Operators(m) if ops is None else ops
    energies = np.real(np.diag(ops.h_sys + ops.h_bath)) / m.system.omega0
    weights = np.exp(-m.system.beta * (energies - energies.min()))
    return np.diag(weights / weights.sum()).astype(complex)


def dephased_initial_state(m, basis0, rho0):
    return sum(basis0.projector(j) @ rho0 @ basis0.projector(j) for j in range(len(basis0.groups)))


@dataclass
class TPMDistribution:
    """Joint law of the two energy outcomes (energies in units of ``omega0``).

    ``probabilities[i, j]`` is ``P[E_tau = spectrum_tau[i], E_0 = spectrum_0[j]]``.
    """

    spectrum_0: np.ndarray
    spectrum_tau: np.ndarray
    probabilities: np.ndarray
    clusters_0: list = field(repr=False, default_factory=list)
    clusters_tau: list = field(repr=False, default_factory=list)
    unitarity_residual: float = 0.0

    @property
    def entries(self):
        return [
            (float(e0), float(et), float(self.probabilities[i, j]))
            for j, e0 in enumerate(self.spectrum_0)
            for i, et in enumerate(self.spectrum_tau)
        ]

    def work_distribution(self):
        """Marginal law of ``W = E_tau - E_0`` merged on a 1e-9 grid."""
        out = {}
        for e0, et, prob in self.entries:
            w = round(et - e0, 9) + 0.0
            out[w] = out.get(w, 0.0) + prob
        return dict(sorted(out.items()))

    def dump(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for e0, et, prob in self.entries:
                fh.write(f"{e0:.12g},{et:.12g},{prob:.12g}\n")


def tpm_distribution(m, steps=None):
    """Joint two-point-measurement distribution of the total system."""
    if steps is not None:
        m = _with_steps(m, steps)
    ops = _Operators(m)
    w0 = m.system.omega0
    basis0 = MeasurementBasis.of(measurement_hamiltonian(m, 0.0, ops), w0)
    basis_t = MeasurementBasis.of(measurement_hamiltonian(m, m.system.tau, ops), w0)
    rho0 = initial_state(m, ops)
    u = time_ordered_propagator(m, 0.0, ops)
    probs = np.empty((len(basis_t.groups), len(basis0.groups)))
    for j in range(len(basis0.groups)):
        proj = basis0.projector(j)
        probs[:, j] = basis_t.cluster_weights(u @ proj @ rho0 @ proj @ u.conj().T)
    if probs.min() < -1e-12:
        raise NumericalError(f"negative joint probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, None)
    if abs(probs.sum() - 1.0) > 1e-10:
        raise NumericalError(f"joint probabilities sum to {probs.sum():.15f}")
    return TPMDistribution(
        spectrum_0=basis0.levels / w0,
        spectrum_tau=basis_t.levels / w0,
        probabilities=probs,
        clusters_0=basis0.groups,
        clusters_tau=basis_t.groups,
        unitarity_residual=unitarity_residual(u),
    )


def _with_steps(m, steps):
    from dataclasses import replace

    return replace(m, steps=int(steps))


def fourier_generating_function(d, u):
    """``sum exp(i u (E_tau - E_0)) P`` from a tabulated distribution."""
    u = np.asarray(u, dtype=float)
    work = d.spectrum_tau[:, None] - d.spectrum_0[None, :]
    out = np.sum(np.exp(1j * u[..., None, None] * work) * d.probabilities, axis=(-2, -1))
    return complex(out) if out.ndim == 0 else out


class OracleContext:
    """Operators, dephased initial state and cached propagator of a model."""

    def __init__(self, m):
        self.m = m
        self.ops = _Operators(m)
        w0 = m.system.omega0
        self.h0 = measurement_hamiltonian(m, 0.0, self.ops) / w0
        self.ht = measurement_hamiltonian(m, m.system.tau, self.ops) / w0
        basis0 = MeasurementBasis.of(self.h0 * w0, w0)
        self.rho = dephased_initial_state(m, basis0, initial_state(m, self.ops))
        self._u = None

    @property
    def u(self):
        if self._u is None:
            self._u = time_ordered_propagator(self.m, 0.0, self.ops)
        return self._u


def _u_map(ctx, u):
    """``U_u = exp(i u H(tau)) U exp(-i u H(0))`` via Taylor exponentials."""
    return matrix_exponential(1j * u * ctx.ht) @ ctx.u @ matrix_exponential(-1j * u * ctx.h0)


def generating_function_exact(m, u, context=None):
    """``G(u) = Tr{U_{u/2} rho0 U_{-u/2}^dag}`` (``u`` in units of ``1/omega0``)."""
    ctx = OracleContext(m) if context is None else context
    values = [np.trace(_u_map(ctx, x / 2) @ ctx.rho @ _u_map(ctx, -x / 2).conj().T) for x in np.ravel(u)]
    return complex(values[0]) if np.ndim(u) == 0 else np.array(values).reshape(np.shape(u))


def generating_function_commuting(m, u, context=None):
    """Generating function with all commutators ``[H, dH/dt]`` dropped.

    Evaluated as ``Tr{V_{u/2} rho0 V_{-u/2}^dag}`` where ``V_s`` is generated
    by ``H(t) - s dH/dt`` on the same Magnus grid as ``U``.
    """
    ctx = OracleContext(m) if context is None else context
    w0 = m.system.omega0
    values = []
    for x in np.ravel(u):
        vp = time_ordered_propagator(m, 0.5 * x / w0, ctx.ops)
        vm = time_ordered_propagator(m, -0.5 * x / w0, ctx.ops)
        values.append(np.trace(vp @ ctx.rho @ vm.conj().T))
    return complex(values[0]) if np.ndim(u) == 0 else np.array(values).reshape(np.shape(u))


def moments_from_distribution(d, n):
    """``sum (E_tau - E_0)**n P`` in units of ``omega0**n``."""
    if n not in (1, 2, 3, 4):
        raise DomainError("moment order must be 1..4")
    work = d.spectrum_tau[:, None] - d.spectrum_0[None, :]
    return float(np.sum(work**n * d.probabilities))


_STENCILS = {
    1: ((1, 0.5), (-1, -0.5)),
    2: ((1, 1.0), (0, -2.0), (-1, 1.0)),
    3: ((2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)),
}


@dataclass
class FiniteDifferenceResult:
    value: float
    imag_residue: float
    richardson_gap: float
    noise_floor: float


def finite_difference_moment(G, n, h=0.02):
    """Central-difference moment with two levels of Richardson extrapolation.

    ``G`` is evaluated once on the union of stencil points. The noise floor
    combines the disagreement of the two Richardson levels with a rounding
    estimate ``eps / (h/4)**n``.
    """
    if n not in _STENCILS:
        raise DomainError("finite-difference moments are available for n = 1..3")
    if not 1e-4 <= h <= 1e-1:
        raise StepSizeError(f"step h={h} outside [1e-4, 1e-1]")
    stencil = _STENCILS[n]
    steps = (h, h / 2, h / 4)
    points = sorted({k * s for s in steps for k, _ in stencil})
    values = dict(zip(points, np.atleast_1d(G(np.array(points)))))
    diffs = [sum(c * values[k * s] for k, c in stencil) / s**n * (-1j) ** n for s in steps]
    r1 = (4 * diffs[1] - diffs[0]) / 3
    r2 = (4 * diffs[2] - diffs[1]) / 3
    best = (16 * r2 - r1) / 15
    gap = abs(r2 - r1)
    noise = gap + np.finfo(float).eps * 4 / (h / 4) ** n
    if gap > 1e-4 * max(abs(best), 1.0):
        raise StepSizeError(f"Richardson levels disagree by {gap:.3e} at h={h}")
    return FiniteDifferenceResult(float(best.real), float(abs(best.imag)), float(gap), float(noise))


def moments_by_finite_difference(G, n, h=0.02):
    """n-th moment ``(-i)**n d^n G/du^n`` at ``u = 0`` by finite differences.

    Raises
    ------
    StepSizeError
        If ``h`` is outside ``[1e-4, 1e-1]`` or the two Richardson levels
        disagree by more than 1e-4 relative (absolute below unit scale).
    """
    return finite_difference_moment(G, n, h).value


def commutator_correction_integrals(m):
    """Predicted ``m3(G) - m3(G0)`` from the ``C2``/``C3`` correlation integrals.

    Returns ``(c3_term, cross_term)`` with ``c3_term = 1/4 int <C3^H>`` and
    ``cross_term = 3/2 int int_{t2<t1} Re <C1^H(t1) C2^H(t2)>``, both in units
    of ``omega0**3``, integrated by the trapezoid rule on the propagation grid.
    """
    ctx = OracleContext(m)
    ops, p = ctx.ops, m.system
    n = m.n_steps
    h = p.tau / n
    times = h * np.arange(n + 1)
    lam = p.drive.value(times)
    dlam = p.drive.derivative(times)
    rho = ctx.rho.copy()
    acc = np.zeros_like(rho)
    c3_vals = np.empty(n + 1)
    cross_vals = np.empty(n + 1)
    for k in range(n + 1):
        hk = ops.h_static + lam[k] * ops.drive_op
        pk = dlam[k] * ops.drive_op
        c2 = commutator(hk, pk)
        c3 = commutator(hk, c2)
        c3_vals[k] = np.trace(c3 @ rho).real
        source = c2 @ rho
        value = acc + 0.5 * h * source if k > 0 else np.zeros_like(rho)
        cross_vals[k] = np.trace(pk @ value).real
        if k == n:
            break
        step = _step_unitaries(m, ops, 0.0, k, k + 1)[0]
        weight = 0.5 * h if k == 0 else h
        acc = step @ (acc + weight * source) @ step.conj().T
        rho = step @ rho @ step.conj().T
    w3 = p.omega0**3
    c3_term = 0.25 * np.trapezoid(c3_vals, times) / w3
    cross_term = 1.5 * np.trapezoid(cross_vals, times) / w3
    return float(c3_term), float(cross_term)
