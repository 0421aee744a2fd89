"""Compiled RK4 integration kernels for the two-level Lindblad equation.

State per batch element: p = rho_gg, q = rho_ee (real) and r = rho_ge
(complex).  For the collapse set {sqrt(Gamma) sigma-, sqrt(gamma_phi/2)
sigma_z} the generator reduces to

    dp = +2 Im(c conj(r)) + Gamma q        (c = H_ge, d = H_ee)
    dq = -dp
    dr = -i c (q - p) + i d r - Gamma_2 r

which the kernels integrate with fixed-step classical RK4, evaluating
the drive at the substep times.  dq = -dp holds exactly, so the trace is
conserved to the last bit; a renormalization counter still guards the
invariant.  Batch elements are independent, hence the parallel loop is
deterministic.

The environment variable SIDEBAND_SIM_THREADS caps the number of worker
threads (absence means the numba default).
"""

import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numpy as np
from numba import njit, prange, set_num_threads
from numba import config as _numba_config


def _apply_thread_cap() -> None:
    raw = os.environ.get("SIDEBAND_SIM_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        return
    set_num_threads(max(1, min(n, _numba_config.NUMBA_NUM_THREADS)))


_apply_thread_cap()

_TRACE_TOL = 1e-10


@njit(cache=True, parallel=True)
def rk4_window_mean(delta_ref, amps, offsets, mod_amp, om_m, phi_m,
                    gamma, gamma2, dt, n_steps, n_skip,
                    p0, q0, r0):
    """Integrate and return the mean of rho_ee over steps >= n_skip.

    Returns (mean_ee[N], p[N], q[N], r[N], renorms[N]); the window mean
    is the uniform average of the state at the start of each retained
    step, which averages periodic drives exactly when the window spans
    an integer number of periods that dt divides.
    """
    n_el = delta_ref.shape[0]
    n_tones = amps.shape[0]
    mean_ee = np.zeros(n_el)
    p_out = np.zeros(n_el)
    q_out = np.zeros(n_el)
    r_out = np.zeros(n_el, dtype=np.complex128)
    renorms = np.zeros(n_el, dtype=np.int64)
    for n in prange(n_el):
        p = p0[n]
        q = q0[n]
        r = r0[n]
        dref = delta_ref[n]
        phm = phi_m[n]
        acc = 0.0
        count = 0
        for s in range(n_steps):
            t = s * dt
            if s >= n_skip:
                acc += q
                count += 1
            # k1
            d = -dref + mod_amp * np.cos(om_m * t + phm)
            c = 0.0 + 0.0j
            for j in range(n_tones):
                c += amps[j] * np.exp(1j * (offsets[n, j] * t))
            im = (c * np.conj(r)).imag
            k1p = 2.0 * im + gamma * q
            k1r = -1j * c * (q - p) + 1j * d * r - gamma2 * r
            # k2 (t + dt/2)
            th = t + 0.5 * dt
            d = -dref + mod_amp * np.cos(om_m * th + phm)
            c = 0.0 + 0.0j
            for j in range(n_tones):
                c += amps[j] * np.exp(1j * (offsets[n, j] * th))
            p2 = p + 0.5 * dt * k1p
            q2 = q - 0.5 * dt * k1p
            r2 = r + 0.5 * dt * k1r
            im = (c * np.conj(r2)).imag
            k2p = 2.0 * im + gamma * q2
            k2r = -1j * c * (q2 - p2) + 1j * d * r2 - gamma2 * r2
            # k3 (same H as k2)
            p3 = p + 0.5 * dt * k2p
            q3 = q - 0.5 * dt * k2p
            r3 = r + 0.5 * dt * k2r
            im = (c * np.conj(r3)).imag
            k3p = 2.0 * im + gamma * q3
            k3r = -1j * c * (q3 - p3) + 1j * d * r3 - gamma2 * r3
            # k4 (t + dt)
            tf = t + dt
            d = -dref + mod_amp * np.cos(om_m * tf + phm)
            c = 0.0 + 0.0j
            for j in range(n_tones):
                c += amps[j] * np.exp(1j * (offsets[n, j] * tf))
            p4 = p + dt * k3p
            q4 = q - dt * k3p
            r4 = r + dt * k3r
            im = (c * np.conj(r4)).imag
            k4p = 2.0 * im + gamma * q4
            k4r = -1j * c * (q4 - p4) + 1j * d * r4 - gamma2 * r4

            dp = (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            p = p + dp
            q = q - dp
            r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
            tr = p + q
            if np.abs(tr - 1.0) > _TRACE_TOL:
                p /= tr
                q /= tr
                r /= tr
                renorms[n] += 1
        mean_ee[n] = acc / count if count > 0 else q
        p_out[n] = p
        q_out[n] = q
        r_out[n] = r
    return mean_ee, p_out, q_out, r_out, renorms


@njit(cache=True, parallel=True)
def rk4_sampled(delta_ref, amps, offsets, mod_amp, om_m, phi_m,
                gamma, gamma2, dt, n_steps, stride, t0,
                p0, q0, r0):
    """Integrate for n_steps from start time t0, sampling every `stride`.

    Returns (p_s[N,S], q_s[N,S], r_s[N,S], renorms[N]) with S =
    n_steps//stride + 1 samples (n_steps must be a multiple of stride);
    sample index k holds the state at t0 + k*stride*dt.
    """
    n_el = delta_ref.shape[0]
    n_tones = amps.shape[0]
    n_samples = n_steps // stride + 1
    p_s = np.zeros((n_el, n_samples))
    q_s = np.zeros((n_el, n_samples))
    r_s = np.zeros((n_el, n_samples), dtype=np.complex128)
    renorms = np.zeros(n_el, dtype=np.int64)
    for n in prange(n_el):
        p = p0[n]
        q = q0[n]
        r = r0[n]
        dref = delta_ref[n]
        phm = phi_m[n]
        p_s[n, 0] = p
        q_s[n, 0] = q
        r_s[n, 0] = r
        for s in range(n_steps):
            t = t0 + s * dt
            d = -dref + mod_amp * np.cos(om_m * t + phm)
            c = 0.0 + 0.0j
            for j in range(n_tones):
                c += amps[j] * np.exp(1j * (offsets[n, j] * t))
            im = (c * np.conj(r)).imag
            k1p = 2.0 * im + gamma * q
            k1r = -1j * c * (q - p) + 1j * d * r - gamma2 * r
            th = t + 0.5 * dt
            d = -dref + mod_amp * np.cos(om_m * th + phm)
            c = 0.0 + 0.0j
            for j in range(n_tones):
                c += amps[j] * np.exp(1j * (offsets[n, j] * th))
            p2 = p + 0.5 * dt * k1p
            q2 = q - 0.5 * dt * k1p
            r2 = r + 0.5 * dt * k1r
            im = (c * np.conj(r2)).imag
            k2p = 2.0 * im + gamma * q2
            k2r = -1j * c * (q2 - p2) + 1j * d * r2 - gamma2 * r2
            p3 = p + 0.5 * dt * k2p
            q3 = q - 0.5 * dt * k2p
            r3 = r + 0.5 * dt * k2r
            im = (c * np.conj(r3)).imag
            k3p = 2.0 * im + gamma * q3
            k3r = -1j * c * (q3 - p3) + 1j * d * r3 - gamma2 * r3
            tf = t + dt
            d = -dref + mod_amp * np.cos(om_m * tf + phm)
            c = 0.0 + 0.0j
            for j in range(n_tones):
                c += amps[j] * np.exp(1j * (offsets[n, j] * tf))
            p4 = p + dt * k3p
            q4 = q - dt * k3p
            r4 = r + dt * k3r
            im = (c * np.conj(r4)).imag
            k4p = 2.0 * im + gamma * q4
            k4r = -1j * c * (q4 - p4) + 1j * d * r4 - gamma2 * r4

            dp = (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            p = p + dp
            q = q - dp
            r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
            tr = p + q
            if np.abs(tr - 1.0) > _TRACE_TOL:
                p /= tr
                q /= tr
                r /= tr
                renorms[n] += 1
            if (s + 1) % stride == 0:
                k = (s + 1) // stride
                p_s[n, k] = p
                q_s[n, k] = q
                r_s[n, k] = r
    return p_s, q_s, r_s, renorms
