"""Numba kernels for the sequential time loops.

Superoperators act on row-major vectorised 2x2 matrices
``x = (X00, X01, X10, X11)``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _apply4(phi, x):
    out = np.empty(4, dtype=np.complex128)
    for i in range(4):
        acc = 0j
        for j in range(4):
            acc += phi[i, j] * x[j]
        out[i] = acc
    return out


@njit(cache=True)
def _mm(a, b):
    # 2x2 product of vectorised matrices
    out = np.empty(4, dtype=np.complex128)
    out[0] = a[0] * b[0] + a[1] * b[2]
    out[1] = a[0] * b[1] + a[1] * b[3]
    out[2] = a[2] * b[0] + a[3] * b[2]
    out[3] = a[2] * b[1] + a[3] * b[3]
    return out


@njit(cache=True)
def _re_trace_mm(a, b):
    return (a[0] * b[0] + a[1] * b[2] + a[2] * b[1] + a[3] * b[3]).real


@njit(cache=True)
def state_trajectory_kernel(phi, rho0, n_steps):
    """Propagate a density matrix, re-symmetrising after every step."""
    const = phi.shape[0] == 1
    out = np.empty((n_steps + 1, 4), dtype=np.complex128)
    out[0] = rho0
    x = rho0.copy()
    for k in range(n_steps):
        y = _apply4(phi[0] if const else phi[k], x)
        off = 0.5 * (y[1] + np.conj(y[2]))
        x[0] = y[0].real
        x[3] = y[3].real
        x[1] = off
        x[2] = np.conj(off)
        out[k + 1] = x
    return out


@njit(cache=True)
def coevolve_kernel(phi, rho, P, C2, h):
    """Single forward pass over the grid co-evolving the regression chains.

    Chains (rows of ``run``): 0 = A1 (P rho), 1 = A2 (rho P), 2 = B1 (P A1),
    3 = B2 (P A2), 4 = D (C2 rho). Each chain holds the trapezoid sum of
    propagated sources; the value at ``t_k`` is ``run + h/2 * source_k``.

    Returns cumulative integrals ``(4, N+1)`` for W1, W2, W3_0 and the cross
    correction, and the chain values at the final time.
    """
    const = phi.shape[0] == 1
    n = rho.shape[0] - 1
    run = np.zeros((5, 4), dtype=np.complex128)
    val = np.zeros((5, 4), dtype=np.complex128)
    src = np.zeros((5, 4), dtype=np.complex128)
    cum = np.zeros((4, n + 1))
    prev = np.zeros(4)
    cur = np.zeros(4)
    for k in range(n + 1):
        r = rho[k]
        pk = P[k]
        src[0] = _mm(pk, r)
        src[1] = _mm(r, pk)
        src[4] = _mm(C2[k], r)
        if k == 0:
            for c in range(5):
                val[c, :] = 0.0
        else:
            val[0] = run[0] + 0.5 * h * src[0]
            val[1] = run[1] + 0.5 * h * src[1]
            val[4] = run[4] + 0.5 * h * src[4]
        src[2] = _mm(pk, val[0])
        src[3] = _mm(pk, val[1])
        if k > 0:
            val[2] = run[2] + 0.5 * h * src[2]
            val[3] = run[3] + 0.5 * h * src[3]
        cur[0] = _re_trace_mm(pk, r)
        cur[1] = 2.0 * _re_trace_mm(pk, val[0])
        cur[2] = 3.0 * (_re_trace_mm(pk, val[2]) + _re_trace_mm(pk, val[3]))
        cur[3] = 1.5 * _re_trace_mm(pk, val[4])
        if k > 0:
            for q in range(4):
                cum[q, k] = cum[q, k - 1] + 0.5 * h * (prev[q] + cur[q])
        for q in range(4):
            prev[q] = cur[q]
        if k == n:
            break
        c = 0.5 * h if k == 0 else h
        step = phi[0] if const else phi[k]
        for ch in range(5):
            run[ch] = _apply4(step, run[ch] + c * src[ch])
    return cum, val


@njit(cache=True)
def no_jump_path(step_maps, start, k0, gamma_down, gamma_up, dt):
    """Normalised no-jump states and survival products from ``start`` at step ``k0``.

    ``survival[j]`` is the probability of no jump in steps ``k0 .. k0 + j``;
    ``states[j]`` is the state after step ``k0 + j - 1`` (``states[0] = start``).
    """
    n = step_maps.shape[0] - k0
    survival = np.empty(n)
    states = np.empty((n + 1, 2), dtype=np.complex128)
    g = start[0]
    e = start[1]
    states[0, 0] = g
    states[0, 1] = e
    s = 1.0
    for j in range(n):
        pg = g.real * g.real + g.imag * g.imag
        pe = e.real * e.real + e.imag * e.imag
        s *= 1.0 - (gamma_down * pe + gamma_up * pg) * dt
        survival[j] = s
        m = step_maps[k0 + j]
        g2 = m[0, 0] * g + m[0, 1] * e
        e2 = m[1, 0] * g + m[1, 1] * e
        norm = np.sqrt(g2.real * g2.real + g2.imag * g2.imag + e2.real * e2.real + e2.imag * e2.imag)
        g = g2 / norm
        e = e2 / norm
        states[j + 1, 0] = g
        states[j + 1, 1] = e
    return survival, states


@njit(cache=True)
def _first_below(survival, r):
    # first index j with survival[j] < r (survival is non-increasing); len if none
    lo = 0
    hi = survival.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if survival[mid] < r:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def _segment(step_maps, g, e, k0, r, gamma_down, gamma_up, dt):
    # walk a no-jump segment until its survival drops below r
    n_steps = step_maps.shape[0]
    s = 1.0
    for k in range(k0, n_steps):
        pg = g.real * g.real + g.imag * g.imag
        pe = e.real * e.real + e.imag * e.imag
        p_down = gamma_down * pe * dt
        p_jump = p_down + gamma_up * pg * dt
        s *= 1.0 - p_jump
        if s < r:
            return k, p_down / p_jump, g, e
        m = step_maps[k]
        g2 = m[0, 0] * g + m[0, 1] * e
        e2 = m[1, 0] * g + m[1, 1] * e
        norm = np.sqrt(g2.real * g2.real + g2.imag * g2.imag + e2.real * e2.real + e2.imag * e2.imag)
        g = g2 / norm
        e = e2 / norm
    return n_steps, 0.0, g, e


@njit(cache=True)
def jump_trajectories_kernel(
    step_maps, uniforms, p_ground, gamma_down, gamma_up, dt, final_basis,
    base_survival, base_final, base_down_frac, jump_steps, jump_kinds,
):
    """First-order quantum-jump unravelling for a block of trajectories.

    On the grid, a jump happens in step ``k`` with probability
    ``(gamma_down |psi_e|^2 + gamma_up |psi_g|^2) dt``, split between
    emission (``sqrt(gamma_down) a``) and absorption (``sqrt(gamma_up) a_dag``);
    otherwise the normalised no-jump map is applied. The step of the next
    jump is drawn by inverting the survival product of the current no-jump
    segment, which samples the same discrete process with two uniforms per
    segment. Segments starting at t=0 use the precomputed ``base_*`` paths
    (index 0: start in g, 1: start in e).

    ``uniforms[i]`` is consumed as: initial level, then ``(r, v)`` per
    segment, then the final measurement. ``jump_steps``/``jump_kinds`` rows
    receive the step index and kind (+1 emission, -1 absorption) of each
    jump up to their width.

    Returns ``(initial, final, n_emission, n_absorption, used)``; ``used[i]``
    is -1 when trajectory ``i`` ran out of uniforms and must be redone with
    a longer stream.
    """
    n_traj = uniforms.shape[0]
    width = uniforms.shape[1]
    n_steps = step_maps.shape[0]
    max_rec = jump_steps.shape[1]
    initial = np.empty(n_traj, dtype=np.int64)
    final = np.empty(n_traj, dtype=np.int64)
    n_em = np.zeros(n_traj, dtype=np.int64)
    n_ab = np.zeros(n_traj, dtype=np.int64)
    used = np.zeros(n_traj, dtype=np.int64)
    for i in range(n_traj):
        u = uniforms[i]
        lvl = 0 if u[0] < p_ground else 1
        initial[i] = lvl
        pos = 1
        k = 0
        g = 1.0 + 0j if lvl == 0 else 0j
        e = 0j if lvl == 0 else 1.0 + 0j
        ok = True
        n_jumps = 0
        while True:
            if pos + 2 >= width:
                ok = False
                break
            r = u[pos]
            v = u[pos + 1]
            pos += 2
            if k == 0:
                j = _first_below(base_survival[lvl], r)
                if j < n_steps:
                    frac = base_down_frac[lvl, j]
                    k_jump = j
                else:
                    k_jump = n_steps
                    g = base_final[lvl, 0]
                    e = base_final[lvl, 1]
            else:
                k_jump, frac, g, e = _segment(step_maps, g, e, k, r, gamma_down, gamma_up, dt)
            if k_jump >= n_steps:
                break
            if v < frac:
                g = 1.0 + 0j
                e = 0j
                n_em[i] += 1
                kind = 1
            else:
                g = 0j
                e = 1.0 + 0j
                n_ab[i] += 1
                kind = -1
            if n_jumps < max_rec:
                jump_steps[i, n_jumps] = k_jump
                jump_kinds[i, n_jumps] = kind
            n_jumps += 1
            k = k_jump + 1
            if k >= n_steps:
                break
        if not ok or pos >= width:
            used[i] = -1
            continue
        amp0 = np.conj(final_basis[0, 0]) * g + np.conj(final_basis[1, 0]) * e
        prob0 = amp0.real * amp0.real + amp0.imag * amp0.imag
        final[i] = 0 if u[pos] < prob0 else 1
        used[i] = pos + 1
    return initial, final, n_em, n_ab, used
