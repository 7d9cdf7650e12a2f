"""Quantum-jump (Monte Carlo wave function) sampling of the work distribution.

Each trajectory starts in a thermally sampled level, evolves under the
non-Hermitian effective Hamiltonian between emission/absorption jumps and
ends with a projective measurement. Its work is the system energy change
plus the net number of emitted quanta (in units of ``hbar omega0``).

Random numbers are counter based: trajectory ``i`` of an ensemble with seed
``s`` reads the window ``[i * K, (i + 1) * K)`` of the Philox stream keyed by
``(s, 0)``; if it needs more, it continues on the stream keyed by
``(s, i + 1)``. Results therefore do not depend on how trajectories are
split between workers.
"""

import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .densemath import hermitian_eigensystem
from .exceptions import DomainError, StepSizeError
from .lindblad import rk4_step_maps
from .model import PROJ_E, PROJ_G, system_hamiltonian, system_hamiltonian_stack, thermal_populations, transition_rates

LEVELS = ("g", "e")
WINDOW = 64
BLOCK = 8192
MAX_STEP_PROBABILITY = 0.1
_RECORDED_JUMPS = 8


@dataclass
class WorkRecord:
    initial_level: str
    jumps: list
    final_level: str
    work: float
    n_emission: int = 0
    n_absorption: int = 0

    def csv_line(self):
        return f"{self.initial_level},{self.final_level},{self.n_emission},{self.n_absorption},{_fmt_work(self.work)}"


def _fmt_work(w):
    return str(int(w)) if float(w).is_integer() else repr(float(w))


@dataclass
class WorkStatistics:
    """Ensemble summary; moments are in units of ``(hbar omega0)**n``."""

    n_traj: int
    moments: tuple
    stderr: tuple
    histogram: dict
    final_populations: tuple
    counts: dict = field(repr=False, default_factory=dict)

    def moment(self, n):
        """``n``-th moment of the histogram (compensated summation over counts)."""
        return math.fsum(c * w**n for w, c in self.counts.items()) / self.n_traj

    def exponential_average(self, beta):
        """``<exp(-beta W)>`` and its standard error (``beta`` dimensionless)."""
        vals = {w: math.exp(-beta * w) for w in self.counts}
        return _mean_and_stderr(self.counts, vals, self.n_traj)


def _mean_and_stderr(counts, values, n):
    mean = math.fsum(c * values[w] for w, c in counts.items()) / n
    if n < 2:
        return mean, float("nan")
    var = math.fsum(c * (values[w] - mean) ** 2 for w, c in counts.items()) / (n - 1)
    return mean, math.sqrt(var / n)


def _check_protocol(p):
    if not p.half_integer_cycles and not p.offgrid_tau:
        raise DomainError("quantum-jump runs need integer/half-integer cycles unless offgrid_tau is set")
    gd, gu = transition_rates(p)
    if max(gd, gu) * p.dt > MAX_STEP_PROBABILITY:
        raise StepSizeError(
            f"jump probability per step up to {max(gd, gu) * p.dt:.3g} exceeds {MAX_STEP_PROBABILITY}; refine the grid"
        )


def effective_hamiltonian_maps(p):
    """RK4 step maps of ``d psi/dt = -i H_eff(t) psi``."""
    gd, gu = transition_rates(p)
    decay = 0.5j * (gd * PROJ_E + gu * PROJ_G)

    def generator_at(times):
        return -1j * (system_hamiltonian_stack(p, times) - decay[None])

    return rk4_step_maps(generator_at, 0.0, p.tau, p.steps)


def final_measurement_basis(p):
    """Eigenvalues and eigenvectors of the final measurement Hamiltonian."""
    if p.offgrid_tau and not p.half_integer_cycles:
        w, v = hermitian_eigensystem(system_hamiltonian(p, p.tau))
        return w / p.omega0, v
    return np.array([0.0, 1.0]), np.eye(2, dtype=complex)


class _Prepared:
    """Per-parameter data shared by all trajectories."""

    def __init__(self, p):
        _check_protocol(p)
        self.p = p
        self.gd, self.gu = transition_rates(p)
        self.p_ground = thermal_populations(p.beta)[0]
        self.maps = np.ascontiguousarray(effective_hamiltonian_maps(p))
        self.energies, self.basis = final_measurement_basis(p)
        self.basis = np.ascontiguousarray(self.basis)
        n = p.steps
        self.base_survival = np.empty((2, n))
        self.base_final = np.empty((2, 2), dtype=complex)
        self.base_down_frac = np.zeros((2, n))
        for lvl in (0, 1):
            start = np.zeros(2, dtype=complex)
            start[lvl] = 1.0
            surv, states = _kernels.no_jump_path(self.maps, start, 0, self.gd, self.gu, p.dt)
            self.base_survival[lvl] = surv
            self.base_final[lvl] = states[-1]
            pe = np.abs(states[:-1, 1]) ** 2
            pg = np.abs(states[:-1, 0]) ** 2
            down = self.gd * pe
            total = down + self.gu * pg
            self.base_down_frac[lvl] = np.divide(down, total, out=np.zeros(n), where=total > 0)

    def run(self, uniforms, record=_RECORDED_JUMPS):
        steps = np.full((uniforms.shape[0], record), -1, dtype=np.int64)
        kinds = np.zeros((uniforms.shape[0], record), dtype=np.int64)
        out = _kernels.jump_trajectories_kernel(
            self.maps, np.ascontiguousarray(uniforms), self.p_ground, self.gd, self.gu, self.p.dt,
            self.basis, self.base_survival, self.base_final, self.base_down_frac, steps, kinds,
        )
        return out, steps, kinds

    def work(self, initial, final, n_em, n_ab):
        return self.energies[final] - initial + n_em - n_ab


def _main_stream(master_seed, first, count):
    bg = np.random.Philox(key=np.array([master_seed, 0], dtype=np.uint64))
    bg.advance(first * WINDOW // 4)
    return np.random.Generator(bg).random((count, WINDOW))


def _overflow_stream(master_seed, index, length):
    bg = np.random.Philox(key=np.array([master_seed, index + 1], dtype=np.uint64))
    return np.random.Generator(bg).random(length)


def trajectory_uniforms(p, master_seed, index):
    """Full uniform stream read by trajectory ``index`` of an ensemble."""
    head = _main_stream(master_seed, index, 1)[0]
    return np.concatenate([head, _overflow_stream(master_seed, index, 2 * p.steps + 4)])


def sample_initial_level(p, rng):
    """Thermal draw of the initial level: ``'g'`` with probability ``1/(1+exp(-beta))``."""
    return "g" if rng.random() < thermal_populations(p.beta)[0] else "e"


def _record(prep, out, steps, kinds, row):
    initial, final, n_em, n_ab, _ = (x[row] for x in out)
    times = prep.p.time_grid()
    n_jumps = int(n_em + n_ab)
    jumps = [
        (float(times[steps[row, j] + 1]), "emission" if kinds[row, j] > 0 else "absorption")
        for j in range(min(n_jumps, steps.shape[1]))
    ]
    return WorkRecord(
        initial_level=LEVELS[initial],
        jumps=jumps,
        final_level=LEVELS[final],
        work=float(prep.work(initial, final, n_em, n_ab)),
        n_emission=int(n_em),
        n_absorption=int(n_ab),
    )


def evolve_trajectory(p, rng=None, uniforms=None):
    """Sample one trajectory and return its :class:`WorkRecord`.

    Uniforms are drawn from ``rng`` unless an explicit stream is given (see
    :func:`trajectory_uniforms`).
    """
    prep = _Prepared(p)
    if uniforms is None:
        uniforms = rng.random(2 * p.steps + 6)
    uniforms = np.asarray(uniforms, dtype=float)[None]
    record = 2 * p.steps + 2
    out, steps, kinds = prep.run(uniforms, record=record)
    if out[4][0] < 0:
        raise RuntimeError("uniform stream too short for this trajectory")
    return _record(prep, out, steps, kinds, 0)


def _run_block(args):
    p, master_seed, first, count, with_records = args
    prep = _Prepared(p)
    u = _main_stream(master_seed, first, count)
    out, steps, kinds = prep.run(u, record=1)
    initial, final, n_em, n_ab, used = out
    for row in np.nonzero(used < 0)[0]:
        full = trajectory_uniforms(p, master_seed, first + int(row))
        o, _, _ = prep.run(full[None], record=1)
        for arr, val in zip((initial, final, n_em, n_ab), o[:4]):
            arr[row] = val[0]
    work = prep.work(initial, final, n_em, n_ab)
    hist = Counter(work.tolist())
    finals = np.bincount(final, minlength=2)
    lines = None
    if with_records:
        lines = [
            f"{LEVELS[i]},{LEVELS[f]},{e},{a},{_fmt_work(w)}"
            for i, f, e, a, w in zip(initial, final, n_em, n_ab, work.tolist())
        ]
    return hist, finals, lines


def worker_count():
    try:
        return max(1, int(os.environ.get("WORKMOMENTS_THREADS", "1")))
    except ValueError:
        return 1


def run_ensemble(p, n_traj, master_seed=0, workers=None, records_path=None):
    """Aggregate ``n_traj`` independent trajectories into :class:`WorkStatistics`.

    Standard errors are sample standard deviations of ``W**n`` over
    ``sqrt(n_traj)``; with a single trajectory they are NaN.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    _check_protocol(p)
    workers = worker_count() if workers is None else workers
    tasks = [
        (p, master_seed, first, min(BLOCK, n_traj - first), records_path is not None)
        for first in range(0, n_traj, BLOCK)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, tasks))
    else:
        results = [_run_block(t) for t in tasks]
    counts = Counter()
    finals = np.zeros(2, dtype=np.int64)
    for hist, fin, _ in results:
        counts.update(hist)
        finals += fin
    if records_path is not None:
        with open(records_path, "w", encoding="utf-8", newline="\n") as fh:
            for _, _, lines in results:
                fh.write("\n".join(lines) + "\n")
    return summarize(counts, n_traj, finals)


def summarize(counts, n_traj, finals):
    counts = dict(sorted(counts.items()))
    if all(float(w).is_integer() for w in counts):
        counts = {int(w): c for w, c in counts.items()}
    histogram = {w: c / n_traj for w, c in counts.items()}
    moments, errors = [], []
    for n in (1, 2, 3):
        m, s = _mean_and_stderr(counts, {w: w**n for w in counts}, n_traj)
        moments.append(m)
        errors.append(s)
    return WorkStatistics(
        n_traj=n_traj,
        moments=tuple(moments),
        stderr=tuple(errors),
        histogram=histogram,
        final_populations=tuple(float(x) / n_traj for x in finals),
        counts=counts,
    )
