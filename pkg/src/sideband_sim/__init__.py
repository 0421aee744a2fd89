"""Simulator of resolved-sideband optomechanical control of a two-level
solid-state emitter driven by optical tones and a surface-acoustic-wave
phonon field.

Reproduces phonon-assisted excitation spectra (carrier plus red/blue
sidebands), spectral-diffusion-broadened linewidths and their power
dependence, two-pathway carrier/sideband interference fringes, and
acoustically driven Rabi oscillations, together with a quantized-phonon
oracle validating the semiclassical model in the coherent-state limit.
"""

__version__ = "0.1.0"

from .params import (Calibration, DriveConfig, EmitterParams, MaterialParams,
                     OpticalTone, PhononDrive, Trajectory, angular_rate,
                     ground_state, ordinary_mhz)
from .coupling import (bessel_j, beta_to_g_sqrt_n, default_max_order,
                       g_sqrt_n_to_beta, jacobi_anger_components,
                       optical_power_to_rabi, red_sideband_resonance_detuning,
                       rf_power_to_beta, saw_amplitude, sideband_rabi,
                       single_phonon_coupling)
from .hamiltonian import compile_drive, semiclassical_hamiltonian
from .lindblad import (CollapseSet, evolve, fluorescence_rate, lindblad_rhs,
                       power_broadened_fwhm, quasi_steady_excited,
                       steady_state_excited_population)
from .fock import (FockOperators, build_full_hamiltonian,
                   classical_correspondence, coherent_state,
                   evolve_schrodinger, fock_basis_state, joint_state,
                   quantized_red_sideband_detuning)
from .spectroscopy import (PeakFit, Spectrum, analyze_sideband_spectrum,
                           calibrate_sd_fwhm, default_grid, fit_lorentzians,
                           linewidth_vs_power, ple_scan,
                           sideband_amplitude_scaling,
                           spectral_diffusion_average)
from .experiments import (BinnedCounts, DampedSinusoidFit, InterferenceConfig,
                          RabiSequenceConfig, fit_damped_sinusoid,
                          fit_phase_fringe, interference_scan_aom,
                          interference_scan_phase, rabi_sequence)
from .config import RunConfig, load_config, validate_mapping

__all__ = [
    "Calibration", "DriveConfig", "EmitterParams", "MaterialParams",
    "OpticalTone", "PhononDrive", "Trajectory", "angular_rate",
    "ground_state", "ordinary_mhz",
    "bessel_j", "beta_to_g_sqrt_n", "default_max_order", "g_sqrt_n_to_beta",
    "jacobi_anger_components", "optical_power_to_rabi",
    "red_sideband_resonance_detuning", "rf_power_to_beta", "saw_amplitude",
    "sideband_rabi", "single_phonon_coupling",
    "compile_drive", "semiclassical_hamiltonian",
    "CollapseSet", "evolve", "fluorescence_rate", "lindblad_rhs",
    "power_broadened_fwhm", "quasi_steady_excited",
    "steady_state_excited_population",
    "FockOperators", "build_full_hamiltonian", "classical_correspondence",
    "coherent_state", "evolve_schrodinger", "fock_basis_state",
    "joint_state", "quantized_red_sideband_detuning",
    "PeakFit", "Spectrum", "analyze_sideband_spectrum", "calibrate_sd_fwhm",
    "default_grid", "fit_lorentzians", "linewidth_vs_power", "ple_scan",
    "sideband_amplitude_scaling", "spectral_diffusion_average",
    "BinnedCounts", "DampedSinusoidFit", "InterferenceConfig",
    "RabiSequenceConfig", "fit_damped_sinusoid", "fit_phase_fringe",
    "interference_scan_aom", "interference_scan_phase", "rabi_sequence",
    "RunConfig", "load_config", "validate_mapping",
]
