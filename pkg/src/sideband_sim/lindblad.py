"""Density-matrix evolution with spontaneous emission and pure dephasing.

Collapse operators: L1 = sqrt(Gamma) sigma- (spontaneous emission) and
L2 = sqrt(gamma_phi/2) sigma_z (pure dephasing); with these conventions
the optical coherence decays at Gamma_2 = Gamma/2 + gamma_phi exactly.

The integrator is fixed-step classical RK4 with the Hamiltonian
evaluated at the RK substep times: the drive is smooth and bounded, and
a fixed step gives bit-reproducible trajectories for golden tests.  The
default step is min(resolved periods)/40, where the period set includes
every tone detuning in addition to the contract's {phonon period, beat
periods, 2*pi/Omega_0, 1/Gamma_2} (large detunings make the solution,
not the Hamiltonian, the fastest object in the problem).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernel
from .exceptions import NonFiniteStateError, StepSizeError
from .hamiltonian import CompiledDrive, compile_drive
from .params import (DriveConfig, EmitterParams, Trajectory, angular_rate,
                     check_density_matrix, SIGMA_MINUS, SIGMA_Z)


@dataclass(frozen=True)
class CollapseSet:
    """Collapse operators with their rates folded in (units rad/ns)."""

    operators: Tuple[np.ndarray, ...]

    @classmethod
    def from_emitter(cls, emitter: EmitterParams) -> "CollapseSet":
        ops = []
        if emitter.gamma > 0:
            ops.append(math.sqrt(emitter.gamma) * SIGMA_MINUS)
        if emitter.gamma_phi > 0:
            ops.append(math.sqrt(emitter.gamma_phi / 2.0) * SIGMA_Z)
        return cls(tuple(ops))


def lindblad_rhs(rho: np.ndarray, h: np.ndarray,
                 collapse: CollapseSet) -> np.ndarray:
    """drho/dt = -i[H, rho] + sum_k (L rho L+ - (L+L rho + rho L+L)/2).

    Works on single 2x2 matrices or on (..., 2, 2) stacks.  The output
    is traceless and Hermitian by construction.
    """
    drho = -1j * (h @ rho - rho @ h)
    for op in collapse.operators:
        op_dag = op.conj().T
        op2 = op_dag @ op
        drho = drho + (op @ rho @ op_dag
                       - 0.5 * (op2 @ rho + rho @ op2))
    return drho


def spec_min_period(config: DriveConfig, emitter: EmitterParams) -> float:
    """Smallest contract period (ns): phonon, tone beats, Rabi, 1/Gamma_2."""
    periods = []
    if emitter.gamma2 > 0:
        periods.append(1.0 / emitter.gamma2)
    if config.phonon is not None:
        periods.append(config.phonon.period_ns)
    for tone in config.tones:
        if tone.nu_rabi > 0:
            periods.append(1e3 / tone.nu_rabi)
    for i, a in enumerate(config.tones):
        for b in config.tones[i + 1:]:
            beat = abs(a.nu_detuning - b.nu_detuning)
            if beat > 0:
                periods.append(1e3 / beat)
    return min(periods) if periods else math.inf


def _drive_rate_scale(drive: CompiledDrive, emitter: EmitterParams) -> float:
    """Conservative bound on the fastest angular rate in the problem."""
    rate = emitter.gamma2
    if drive.delta_ref.size:
        rate += float(np.max(np.abs(drive.delta_ref)))
    if drive.offsets.size:
        rate += float(np.max(np.abs(drive.offsets)))
    rate += 2.0 * float(np.sum(np.abs(drive.amps)))
    rate += drive.mod_amp + drive.omega_m
    return rate


def default_time_step(config: DriveConfig, emitter: EmitterParams,
                      extra_detuning_mhz: float = 0.0) -> float:
    """Default integrator step: min resolved period / 40."""
    drive = compile_drive(config) if config.tones else None
    rate = emitter.gamma2
    if drive is not None:
        rate = _drive_rate_scale(drive, emitter)
    rate += angular_rate(abs(extra_detuning_mhz))
    dt = (2.0 * math.pi / rate) / 40.0 if rate > 0 else 1.0
    return min(dt, spec_min_period(config, emitter) / 40.0)


def validate_time_step(dt: float, config: DriveConfig,
                       emitter: EmitterParams) -> None:
    """Enforce dt <= min(contract periods)/20, else StepSizeError."""
    limit = spec_min_period(config, emitter) / 20.0
    if dt > limit:
        raise StepSizeError(
            f"dt = {dt:.6g} ns exceeds min(period)/20 = {limit:.6g} ns")


def _check_finite(arrays, context: str) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a) if not np.iscomplexobj(a)
                      else (np.isfinite(a.real) & np.isfinite(a.imag))):
            raise NonFiniteStateError(
                f"non-finite state during {context}; inputs too stiff "
                f"for the step size or invalid parameters")


def evolve(rho0: np.ndarray, config: DriveConfig, emitter: EmitterParams,
           t_span: float, dt: Optional[float] = None,
           sample_stride: int = 1) -> Trajectory:
    """Integrate the master equation and return a sampled Trajectory.

    Parameters
    ----------
    rho0 : (2, 2) complex ndarray
        Initial density matrix (validated).
    config : DriveConfig
        Optical tones and optional phonon drive.
    emitter : EmitterParams
        Decay/dephasing rates (spectral diffusion is not applied here).
    t_span : float
        Evolution time in ns.
    dt : float, optional
        Fixed step in ns; default min(resolved periods)/40.  Values
        above the contract bound min(period)/20 raise StepSizeError.
    sample_stride : int
        Record every `sample_stride`-th step.
    """
    check_density_matrix(rho0)
    if t_span <= 0:
        raise ValueError(f"t_span must be > 0, got {t_span}")
    if dt is None:
        dt = default_time_step(config, emitter)
    else:
        validate_time_step(dt, config, emitter)
    n_steps = max(1, math.ceil(t_span / dt))
    n_steps = sample_stride * math.ceil(n_steps / sample_stride)
    dt = t_span / n_steps

    drive = compile_drive(config)
    p0 = np.array([rho0[0, 0].real])
    q0 = np.array([rho0[1, 1].real])
    r0 = np.array([rho0[0, 1]])
    p_s, q_s, r_s, renorms = _kernel.rk4_sampled(
        drive.delta_ref, drive.amps, drive.offsets, drive.mod_amp,
        drive.omega_m, drive.phi_m, emitter.gamma, emitter.gamma2,
        dt, n_steps, sample_stride, 0.0, p0, q0, r0)
    _check_finite((q_s, r_s), "evolve")
    times = np.arange(q_s.shape[1]) * (dt * sample_stride)
    # the kernel propagates rho_ge; the trajectory reports rho_eg
    return Trajectory(times=times, rho_ee=q_s[0], rho_eg=np.conj(r_s[0]),
                      renormalizations=int(renorms[0]))


def plan_quasi_steady_window(drive: CompiledDrive, emitter: EmitterParams,
                             transient_ns: Optional[float] = None,
                             window_ns: Optional[float] = None,
                             ) -> Tuple[float, int, int]:
    """(dt, n_skip, n_steps) for a quasi-steady window average.

    Defaults: transient 8/Gamma, window 10/Gamma (contract minima 5/Gamma
    and 10/Gamma).  With a phonon drive the step is snapped to divide the
    phonon period and transient/window are rounded up to whole periods,
    so every drive harmonic averages to zero exactly.
    """
    gamma = emitter.gamma
    if transient_ns is None:
        transient_ns = 8.0 / gamma
    if window_ns is None:
        window_ns = 10.0 / gamma
    if window_ns < 10.0 / gamma - 1e-9:
        raise ValueError(f"window {window_ns:.3g} ns below 10/Gamma")
    if transient_ns < 5.0 / gamma - 1e-9:
        raise ValueError(f"transient {transient_ns:.3g} ns below 5/Gamma")

    rate = _drive_rate_scale(drive, emitter)
    dt = (2.0 * math.pi / rate) / 40.0
    if drive.omega_m > 0.0:
        t_m = 2.0 * math.pi / drive.omega_m
        dt = t_m / math.ceil(t_m / dt)
        transient_ns = t_m * math.ceil(transient_ns / t_m)
        window_ns = t_m * math.ceil(window_ns / t_m)
    n_skip = int(round(transient_ns / dt))
    n_steps = n_skip + int(round(window_ns / dt))
    return dt, n_skip, n_steps


def quasi_steady_excited(drive: CompiledDrive, emitter: EmitterParams,
                         transient_ns: Optional[float] = None,
                         window_ns: Optional[float] = None) -> np.ndarray:
    """Window-averaged excited population for every drive element."""
    dt, n_skip, n_steps = plan_quasi_steady_window(
        drive, emitter, transient_ns, window_ns)

    n = drive.n_elements
    mean_ee, _, _, _, _ = _kernel.rk4_window_mean(
        drive.delta_ref, drive.amps, drive.offsets, drive.mod_amp,
        drive.omega_m, drive.phi_m, emitter.gamma, emitter.gamma2,
        dt, n_steps, n_skip, np.ones(n), np.zeros(n),
        np.zeros(n, dtype=complex))
    _check_finite((mean_ee,), "quasi-steady average")
    return mean_ee


def steady_state_excited_population(nu_detuning, nu_rabi: float,
                                    emitter: EmitterParams):
    """Closed-form CW steady state rho_ee = X/(1+2X).

    X = Omega_0^2 Gamma_2 / (2 Gamma (Gamma_2^2 + Delta^2)), all angular.
    Valid for a single tone without phonon drive.  ``nu_detuning`` may
    be an array.
    """
    delta = angular_rate(np.asarray(nu_detuning, dtype=float))
    omega0 = angular_rate(nu_rabi)
    g2 = emitter.gamma2
    x = omega0**2 * g2 / (2.0 * emitter.gamma * (g2**2 + delta**2))
    out = x / (1.0 + 2.0 * x)
    return out if out.ndim else float(out)


def power_broadened_fwhm(nu_rabi: float, emitter: EmitterParams) -> float:
    """FWHM (MHz, ordinary frequency) of the CW carrier resonance.

    Twice the half-width of rho_ee(Delta) from the closed form above:
    FWHM = 2*sqrt(Gamma_2^2 + Omega_0^2 Gamma_2/Gamma) / 2pi.
    """
    omega0 = angular_rate(nu_rabi)
    g2 = emitter.gamma2
    width_rad = 2.0 * math.sqrt(g2**2 + omega0**2 * g2 / emitter.gamma)
    return width_rad / angular_rate(1.0)


def fluorescence_rate(rho_ee, emitter: EmitterParams,
                      collection_eta: float = 1.0):
    """Detected fluorescence rate = collection_eta * Gamma * rho_ee (counts/ns)."""
    if not 0.0 <= collection_eta <= 1.0:
        raise ValueError(f"collection_eta must be in [0, 1], got {collection_eta}")
    return collection_eta * emitter.gamma * np.asarray(rho_ee)
