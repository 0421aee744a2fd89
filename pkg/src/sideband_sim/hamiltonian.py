"""Time-dependent semiclassical Hamiltonian of the driven two-level emitter.

Frame convention: all dynamics are computed in the frame rotating at the
reference (first-listed) optical tone.  In that frame

    H(t)/hbar = [-Delta_ref + beta*omega_m*cos(omega_m t + phi_m)] |e><e|
                + sum_j (Omega0_j/2) (e^{+i(delta_j t + phi_j)} |g><e| + h.c.)

with Delta_ref the reference tone's detuning from the unshifted carrier
and delta_j the j-th tone's angular offset from the reference tone.
beta*omega_m = 2*g*sqrt(n) is the peak excited-state shift.  No
rotating-wave truncation of sidebands is made: the full time dependence
is integrated, so the off-resonant carrier background during sideband
driving emerges automatically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import DriveConfig, angular_rate


def semiclassical_hamiltonian(t: float, config: DriveConfig) -> np.ndarray:
    """H(t)/hbar as a 2x2 complex Hermitian matrix in rad/ns.

    Basis ordering: index 0 = |g>, index 1 = |e>.  Hermiticity is exact
    by construction (the lower triangle is the conjugate of the upper).
    """
    h = np.zeros((2, 2), dtype=complex)
    if config.tones:
        ref = config.tones[0]
        delta_ref = angular_rate(ref.nu_detuning)
        h_ee = -delta_ref
        coupling = 0.0 + 0.0j
        for tone in config.tones:
            delta_j = angular_rate(tone.nu_detuning - ref.nu_detuning)
            coupling += 0.5 * tone.omega_rabi * np.exp(
                1j * (delta_j * t + tone.phase))
        h[0, 1] = coupling
        h[1, 0] = np.conj(coupling)
    else:
        h_ee = 0.0
    ph = config.phonon
    if ph is not None:
        h_ee = h_ee + ph.beta * ph.omega_m * np.cos(ph.omega_m * t + ph.phi_m)
    h[1, 1] = h_ee
    return h


@dataclass(frozen=True)
class CompiledDrive:
    """Array form of a batch of drive configurations for the integrator.

    One batch element per scan point.  All elements share the tone
    amplitudes/phases and the phonon frequency; the reference detuning,
    the tone offsets and the phonon phase may vary per element (enough
    for detuning scans, spectral-diffusion offsets, AOM scans and
    phi_m fringes).
    """

    delta_ref: np.ndarray      # (N,) rad/ns
    amps: np.ndarray           # (J,) complex, (Omega0_j/2) e^{i phi_j} rad/ns
    offsets: np.ndarray        # (N, J) rad/ns, tone offset from reference
    mod_amp: float             # beta*omega_m, rad/ns
    omega_m: float             # rad/ns (0 when no phonon)
    phi_m: np.ndarray          # (N,) rad

    @property
    def n_elements(self) -> int:
        return self.delta_ref.shape[0]


def compile_drive(config: DriveConfig, detuning_offsets=None,
                  phi_m_values=None, extra_tone_offsets=None) -> CompiledDrive:
    """Expand a DriveConfig template into a CompiledDrive batch.

    Parameters
    ----------
    config : DriveConfig
        Template; must contain at least one tone.
    detuning_offsets : array_like, optional
        Per-element shift (MHz) applied to every tone's detuning; this is
        how detuning scans and static spectral-diffusion offsets enter
        (the transition moving is equivalent to all tones shifting
        rigidly).  Default: single element, no shift.
    phi_m_values : array_like, optional
        Per-element phonon phase; default is the template's phi_m.
    extra_tone_offsets : array_like, optional
        (N, J) additional per-element, per-tone frequency offsets in MHz
        (used by the AOM-frequency scan, where one tone moves relative
        to the others).
    """
    if not config.tones:
        raise ValueError("drive must contain at least one optical tone")
    if detuning_offsets is None:
        detuning_offsets = np.zeros(1)
    detuning_offsets = np.atleast_1d(np.asarray(detuning_offsets, dtype=float))
    n = detuning_offsets.shape[0]
    ref = config.tones[0]
    j = len(config.tones)

    delta_ref = angular_rate(ref.nu_detuning + detuning_offsets)
    amps = np.array([0.5 * tone.omega_rabi * np.exp(1j * tone.phase)
                     for tone in config.tones], dtype=complex)
    base_offsets = np.array([angular_rate(t.nu_detuning - ref.nu_detuning)
                             for t in config.tones])
    offsets = np.broadcast_to(base_offsets, (n, j)).copy()
    if extra_tone_offsets is not None:
        extra = np.asarray(extra_tone_offsets, dtype=float)
        if extra.shape != (n, j):
            raise ValueError(f"extra_tone_offsets shape {extra.shape} != {(n, j)}")
        offsets = offsets + angular_rate(extra)
        # a shift of a non-reference tone relative to the reference is a
        # pure offset; a shift of the reference tone itself would change
        # the frame, which compile_drive does not support
        if np.any(extra[:, 0] != 0.0):
            raise ValueError("cannot shift the reference tone via extra_tone_offsets")

    ph = config.phonon
    if ph is not None:
        mod_amp = ph.beta * ph.omega_m
        omega_m = ph.omega_m
        base_phi = ph.phi_m
    else:
        mod_amp = 0.0
        omega_m = 0.0
        base_phi = 0.0
    if phi_m_values is None:
        phi_m = np.full(n, base_phi)
    else:
        phi_m = np.asarray(phi_m_values, dtype=float)
        if phi_m.shape != (n,):
            raise ValueError(f"phi_m_values shape {phi_m.shape} != ({n},)")

    return CompiledDrive(delta_ref=delta_ref, amps=amps, offsets=offsets,
                         mod_amp=mod_amp, omega_m=omega_m, phi_m=phi_m)


def drive_hamiltonian(drive: CompiledDrive, t: float) -> np.ndarray:
    """(N, 2, 2) Hamiltonian stack of a compiled drive at time t.

    Reference implementation used by tests; the production integrator
    evaluates the same expressions inside the compiled kernel.
    """
    n = drive.n_elements
    h = np.zeros((n, 2, 2), dtype=complex)
    coupling = (drive.amps[None, :] *
                np.exp(1j * drive.offsets * t)).sum(axis=1)
    h[:, 0, 1] = coupling
    h[:, 1, 0] = np.conj(coupling)
    h[:, 1, 1] = -drive.delta_ref
    if drive.omega_m != 0.0 or drive.mod_amp != 0.0:
        h[:, 1, 1] += drive.mod_amp * np.cos(drive.omega_m * t + drive.phi_m)
    return h
