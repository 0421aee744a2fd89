"""Physical parameter types and unit conventions.

Unit conventions used throughout the package:

* user-facing frequencies are ordinary frequencies ``nu`` in MHz,
* internal angular frequencies are ``omega = 2*pi*nu`` in rad/ns,
* time is in ns, lengths in pm, mass in kg,
* RF power in W, optical power in uW.

The MHz -> rad/ns conversion is applied exactly once, at the input
boundary (the ``angular_rate`` helper); everything downstream works in
angular units.  Planck's constant appears only inside
``coupling.single_phonon_coupling``; all other formulas are written in
rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi

#: MHz -> rad/ns (1 MHz = 1e-3 cycles per ns)
RAD_PER_NS_PER_MHZ = TWO_PI * 1e-3

#: FWHM -> sigma for a Gaussian, 2*sqrt(2*ln 2)
GAUSSIAN_FWHM_TO_SIGMA = 2.3548200450309493

#: Default spontaneous-emission linewidth Gamma/2pi in MHz (12 ns lifetime).
NU_GAMMA_DEFAULT = 13.3

#: Default spectral-diffusion FWHM in MHz.  Calibrated once so that the
#: fitted Lorentzian width of the zero-power carrier line under the
#: default measurement convention equals 175 MHz (see
#: spectroscopy.calibrate_sd_fwhm, which a regression test re-runs
#: against this number).
SD_FWHM_DEFAULT = 173.223


def angular_rate(nu_mhz: float) -> float:
    """Convert an ordinary frequency in MHz to rad/ns."""
    return RAD_PER_NS_PER_MHZ * nu_mhz


def ordinary_mhz(omega_rad_per_ns: float) -> float:
    """Convert an angular frequency in rad/ns back to MHz."""
    return omega_rad_per_ns / RAD_PER_NS_PER_MHZ


@dataclass(frozen=True)
class EmitterParams:
    """Decay and dephasing rates of the two-level optical transition.

    Parameters
    ----------
    nu_gamma : float
        Spontaneous-emission linewidth in MHz; Gamma = 2*pi*nu_gamma.
    nu_phi : float
        Pure-dephasing rate in MHz; gamma_phi = 2*pi*nu_phi.
    sd_fwhm : float
        FWHM in MHz of the Gaussian spectral-diffusion distribution of
        the transition frequency (slow charge noise).
    """

    nu_gamma: float = NU_GAMMA_DEFAULT
    nu_phi: float = 0.0
    sd_fwhm: float = SD_FWHM_DEFAULT

    def __post_init__(self):
        if self.nu_gamma <= 0:
            raise ValueError(f"nu_gamma must be > 0, got {self.nu_gamma}")
        if self.nu_phi < 0:
            raise ValueError(f"nu_phi must be >= 0, got {self.nu_phi}")
        if self.sd_fwhm < 0:
            raise ValueError(f"sd_fwhm must be >= 0, got {self.sd_fwhm}")

    @property
    def gamma(self) -> float:
        """Population decay rate Gamma in rad/ns."""
        return angular_rate(self.nu_gamma)

    @property
    def gamma_phi(self) -> float:
        """Pure-dephasing rate gamma_phi in rad/ns."""
        return angular_rate(self.nu_phi)

    @property
    def gamma2(self) -> float:
        """Total transverse rate Gamma_2 = Gamma/2 + gamma_phi (rad/ns).

        Always derived, never stored.
        """
        return 0.5 * self.gamma + self.gamma_phi

    @property
    def sd_sigma(self) -> float:
        """Standard deviation of the spectral-diffusion offset in MHz."""
        return self.sd_fwhm / GAUSSIAN_FWHM_TO_SIGMA


@dataclass(frozen=True)
class PhononDrive:
    """One classical phonon (SAW) drive of the excited-state energy.

    The excited level is shifted by ``beta * omega_m * cos(omega_m*t +
    phi_m)``; ``beta = 2*g*sqrt(n)/omega_m`` is the dimensionless
    modulation index, the canonical drive-strength parameter here
    because it directly sets the Jacobi-Anger sideband weights J_k(beta).
    """

    nu_m: float
    beta: float = 0.0
    phi_m: float = 0.0

    def __post_init__(self):
        if self.nu_m <= 0:
            raise ValueError(f"nu_m must be > 0, got {self.nu_m}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        object.__setattr__(self, "phi_m", self.phi_m % TWO_PI)

    @property
    def omega_m(self) -> float:
        """Phonon angular frequency in rad/ns."""
        return angular_rate(self.nu_m)

    @property
    def period_ns(self) -> float:
        return 1e3 / self.nu_m


@dataclass(frozen=True)
class OpticalTone:
    """A monochromatic optical drive tone.

    ``nu_detuning`` is the tone's detuning from the unshifted carrier
    transition in MHz (positive = blue); ``nu_rabi`` is the optical Rabi
    frequency Omega_0/2pi in MHz.
    """

    nu_rabi: float
    nu_detuning: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.nu_rabi < 0:
            raise ValueError(f"nu_rabi must be >= 0, got {self.nu_rabi}")

    @property
    def omega_rabi(self) -> float:
        """Rabi angular frequency Omega_0 in rad/ns."""
        return angular_rate(self.nu_rabi)


@dataclass(frozen=True)
class DriveConfig:
    """A set of optical tones plus at most one classical phonon drive.

    The first tone is the reference tone: all dynamics are computed in
    the frame rotating at its frequency, and the other tones appear with
    beat-frequency phase factors.
    """

    tones: Tuple[OpticalTone, ...] = ()
    phonon: Optional[PhononDrive] = None

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))

    @property
    def reference_tone(self) -> Optional[OpticalTone]:
        return self.tones[0] if self.tones else None

    @property
    def beta(self) -> float:
        return self.phonon.beta if self.phonon is not None else 0.0

    def with_reference_detuning(self, nu_detuning: float) -> "DriveConfig":
        """Copy with the reference tone moved to a new detuning."""
        if not self.tones:
            raise ValueError("config has no tones")
        ref = self.tones[0]
        new_ref = OpticalTone(ref.nu_rabi, nu_detuning, ref.phase)
        return DriveConfig((new_ref,) + self.tones[1:], self.phonon)

    def without_phonon(self) -> "DriveConfig":
        return DriveConfig(self.tones, None)


@dataclass(frozen=True)
class MaterialParams:
    """Host-material constants for the electron-phonon coupling.

    Parameters
    ----------
    d_over_2pi : float
        Deformation potential as frequency per unit strain, in MHz
        (default 6.1e8 MHz = 610 THz).  The excited-state shift is
        D*strain with strain = k_m * A_SAW.
    saw_velocity : float
        SAW phase velocity omega_m/k_m in m/s.
    mass : float
        Effective mass of the mechanical oscillator in kg.
    """

    d_over_2pi: float = 6.1e8
    saw_velocity: float = 5600.0
    mass: float = 1e-15

    def __post_init__(self):
        for name in ("d_over_2pi", "saw_velocity", "mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class Calibration:
    """Power-to-drive conversion factors.

    ``eta_rf`` maps RF power to the phonon drive, g*sqrt(n)/2pi =
    eta_rf * sqrt(P_RF), in MHz/sqrt(W).  The default pins beta = 0.455
    at the highest-power Rabi operating point (nu_m = 940 MHz, P_RF =
    0.2 W); other RF powers scale as sqrt(P).  ``kappa_opt`` maps
    optical power to the Rabi frequency, Omega_0/2pi = kappa_opt *
    sqrt(P_o), in MHz/sqrt(uW).
    """

    eta_rf: float = 0.455 * 940.0 / (2.0 * math.sqrt(0.2))
    kappa_opt: float = 65.0

    def __post_init__(self):
        if self.eta_rf < 0:
            raise ValueError(f"eta_rf must be >= 0, got {self.eta_rf}")
        if self.kappa_opt < 0:
            raise ValueError(f"kappa_opt must be >= 0, got {self.kappa_opt}")


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled density-matrix history from ``lindblad.evolve``.

    ``times`` is a uniform, strictly increasing grid in ns; ``rho_ee``
    the excited-state population and ``rho_eg`` the complex optical
    coherence <e|rho|g> at those times.  ``renormalizations`` counts how
    often the integrator had to rescale the trace (should stay 0).
    """

    times: np.ndarray
    rho_ee: np.ndarray
    rho_eg: np.ndarray
    renormalizations: int = 0

    @property
    def rho_eg_re(self):
        return self.rho_eg.real

    @property
    def rho_eg_im(self):
        return self.rho_eg.imag


#: Basis ordering for all 2x2 objects: index 0 = |g>, index 1 = |e>.
GROUND = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
EXCITED = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.conj().T
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)  # +1 on |e>
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def ground_state() -> np.ndarray:
    """Density matrix |g><g|."""
    return GROUND.copy()


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-12,
                         trace_tol: float = 1e-10, pos_tol: float = 1e-10) -> None:
    """Raise ValueError if rho violates the density-matrix invariants.

    Hermiticity to ``herm_tol``, unit trace to ``trace_tol``, and
    positivity (det >= -pos_tol, populations within [0, 1] up to
    ``pos_tol``).
    """
    if rho.shape != (2, 2):
        raise ValueError(f"expected 2x2 matrix, got shape {rho.shape}")
    if abs(rho[0, 1] - np.conj(rho[1, 0])) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValueError("density matrix trace is not 1")
    det = np.linalg.det(rho).real
    if det < -pos_tol:
        raise ValueError(f"density matrix not positive semidefinite (det={det})")
    for pop in (rho[0, 0].real, rho[1, 1].real):
        if pop < -pos_tol or pop > 1.0 + pos_tol:
            raise ValueError(f"population {pop} outside [0, 1]")
