import math

import numpy as np
import pytest

from sideband_sim import (CollapseSet, DriveConfig, EmitterParams,
                          OpticalTone, PhononDrive, angular_rate, bessel_j,
                          compile_drive, evolve, fluorescence_rate,
                          ground_state, lindblad_rhs, power_broadened_fwhm,
                          quasi_steady_excited,
                          red_sideband_resonance_detuning,
                          semiclassical_hamiltonian,
                          steady_state_excited_population)
from sideband_sim.exceptions import StepSizeError
from sideband_sim.fitting import fit_damped_cosine


def python_rk4_evolve(rho0, config, emitter, t_span, dt):
    """Reference integrator built directly on the contract operations."""
    collapse = CollapseSet.from_emitter(emitter)
    n = int(round(t_span / dt))
    rho = rho0.astype(complex).copy()
    out = [rho.copy()]
    for s in range(n):
        t = s * dt
        h1 = semiclassical_hamiltonian(t, config)
        h2 = semiclassical_hamiltonian(t + dt / 2, config)
        h4 = semiclassical_hamiltonian(t + dt, config)
        k1 = lindblad_rhs(rho, h1, collapse)
        k2 = lindblad_rhs(rho + dt / 2 * k1, h2, collapse)
        k3 = lindblad_rhs(rho + dt / 2 * k2, h2, collapse)
        k4 = lindblad_rhs(rho + dt * k3, h4, collapse)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(rho.copy())
    return np.array(out)


class TestLindbladRhs:
    def test_pure_decay(self, emitter):
        rho = np.array([[0, 0], [0, 1]], dtype=complex)
        d = lindblad_rhs(rho, np.zeros((2, 2)), CollapseSet.from_emitter(emitter))
        assert d[1, 1].real == pytest.approx(-emitter.gamma, rel=1e-12)
        assert d[0, 0].real == pytest.approx(emitter.gamma, rel=1e-12)

    def test_dephasing_preserves_populations(self):
        em = EmitterParams(nu_gamma=1e-12, nu_phi=5.0, sd_fwhm=0.0)
        rho = 0.5 * np.eye(2, dtype=complex)
        d = lindblad_rhs(rho, np.zeros((2, 2)), CollapseSet.from_emitter(em))
        # the vanishing-but-positive nu_gamma floor leaves ~3e-15
        assert abs(d[0, 0]) < 1e-14 and abs(d[1, 1]) < 1e-14

    def test_coherence_decay_rate(self):
        # expand the generator by hand: d rho_eg = -(Gamma/2 + gamma_phi) rho_eg
        em = EmitterParams(nu_gamma=13.3, nu_phi=3.7, sd_fwhm=0.0)
        rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        d = lindblad_rhs(rho, np.zeros((2, 2)), CollapseSet.from_emitter(em))
        assert d[1, 0] == pytest.approx(-em.gamma2 * 0.5, rel=1e-12)

    def test_traceless_and_hermitian(self, rng):
        em = EmitterParams(nu_gamma=10.0, nu_phi=2.0, sd_fwhm=0.0)
        collapse = CollapseSet.from_emitter(em)
        for _ in range(30):
            v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            rho = v @ v.conj().T
            rho /= np.trace(rho).real
            h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            h = h + h.conj().T
            d = lindblad_rhs(rho, h, collapse)
            assert abs(np.trace(d)) < 1e-13
            assert np.allclose(d, d.conj().T, atol=1e-13)


class TestEvolve:
    def test_spontaneous_decay(self, emitter):
        cfg = DriveConfig(tones=(OpticalTone(0.0, 0.0),))
        rho0 = np.array([[0, 0], [0, 1]], dtype=complex)
        tr = evolve(rho0, cfg, emitter, t_span=5.0 / emitter.gamma, dt=0.02)
        err = np.abs(tr.rho_ee - np.exp(-emitter.gamma * tr.times)).max()
        assert err < 1e-8

    def test_bare_rabi(self, no_decay):
        cfg = DriveConfig(tones=(OpticalTone(100.0, 0.0),))
        tr = evolve(ground_state(), cfg, no_decay, t_span=30.0, dt=0.005)
        om = angular_rate(100.0)
        err = np.abs(tr.rho_ee - np.sin(om * tr.times / 2.0) ** 2).max()
        assert err < 1e-8

    def test_matches_python_reference(self, emitter, rng):
        """Compiled kernel vs a from-scratch RK4 on the contract ops."""
        cfg = DriveConfig(tones=(OpticalTone(150.0, -400.0, 0.3),
                                 OpticalTone(40.0, 100.0, 1.0)),
                          phonon=PhononDrive(700.0, beta=0.6, phi_m=0.8))
        dt, t_span = 0.01, 5.0
        tr = evolve(ground_state(), cfg, emitter, t_span=t_span, dt=dt)
        ref = python_rk4_evolve(ground_state(), cfg, emitter, t_span, dt)
        assert np.abs(tr.rho_ee - ref[:, 1, 1].real).max() < 1e-12
        assert np.abs(tr.rho_eg - ref[:, 1, 0]).max() < 1e-12

    def test_sideband_oscillation_at_tracked_resonance(self, no_decay):
        nu_m, nu_rabi, beta = 940.0, 290.0, 0.455
        det = red_sideband_resonance_detuning(nu_rabi, beta, nu_m)
        cfg = DriveConfig(tones=(OpticalTone(nu_rabi, det),),
                          phonon=PhononDrive(nu_m, beta=beta))
        tr = evolve(ground_state(), cfg, no_decay, t_span=200.0,
                    sample_stride=8)
        params, _, _ = fit_damped_cosine(tr.times, tr.rho_ee)
        nu_fit = params[2] * 1e3
        assert nu_fit == pytest.approx(66.0, rel=0.05)
        assert nu_fit == pytest.approx(bessel_j(1, beta) * nu_rabi, rel=0.01)

    def test_generalized_rabi_at_bare_detuning(self, no_decay):
        """At detuning exactly -nu_m the oscillation runs at the
        light-shift generalized Rabi frequency, not at J_1*Omega_0."""
        nu_m, nu_rabi, beta = 940.0, 290.0, 0.455
        cfg = DriveConfig(tones=(OpticalTone(nu_rabi, -nu_m),),
                          phonon=PhononDrive(nu_m, beta=beta))
        tr = evolve(ground_state(), cfg, no_decay, t_span=200.0,
                    sample_stride=8)
        params, _, _ = fit_damped_cosine(tr.times, tr.rho_ee)
        shift = -nu_m - red_sideband_resonance_detuning(nu_rabi, beta, nu_m)
        expected = math.hypot(bessel_j(1, beta) * nu_rabi, shift)
        assert params[2] * 1e3 == pytest.approx(expected, rel=0.03)

    def test_diagonal_hamiltonian_keeps_populations(self, no_decay):
        cfg = DriveConfig(tones=(OpticalTone(0.0, 0.0),),
                          phonon=PhononDrive(900.0, beta=0.6))
        tr = evolve(ground_state(), cfg, no_decay, t_span=20.0)
        assert np.abs(tr.rho_ee).max() == 0.0

    def test_step_size_validation(self, emitter):
        cfg = DriveConfig(tones=(OpticalTone(100.0, 0.0),),
                          phonon=PhononDrive(900.0, beta=0.4))
        with pytest.raises(StepSizeError):
            evolve(ground_state(), cfg, emitter, t_span=10.0, dt=0.5)

    def test_trace_and_positivity_along_trajectory(self, emitter):
        cfg = DriveConfig(tones=(OpticalTone(200.0, -500.0, 0.2),),
                          phonon=PhononDrive(800.0, beta=0.8, phi_m=1.0))
        tr = evolve(ground_state(), cfg, emitter, t_span=50.0)
        assert tr.renormalizations == 0
        p = 1.0 - tr.rho_ee
        det = p * tr.rho_ee - np.abs(tr.rho_eg) ** 2
        assert det.min() > -1e-10
        assert tr.rho_ee.min() > -1e-10 and tr.rho_ee.max() < 1 + 1e-10

    def test_uniform_times(self, emitter):
        cfg = DriveConfig(tones=(OpticalTone(50.0, 0.0),))
        tr = evolve(ground_state(), cfg, emitter, t_span=7.3, sample_stride=3)
        steps = np.diff(tr.times)
        assert np.allclose(steps, steps[0], rtol=1e-12)

    def test_detailed_balance(self, emitter, rng):
        cfg = DriveConfig(tones=(OpticalTone(0.0, 0.0),))
        for _ in range(3):
            q = rng.uniform(0.0, 1.0)
            c = rng.uniform(0, math.sqrt(q * (1 - q))) * np.exp(
                1j * rng.uniform(0, 2 * np.pi))
            rho0 = np.array([[1 - q, np.conj(c)], [c, q]])
            tr = evolve(rho0, cfg, emitter, t_span=30.0 / emitter.gamma,
                        dt=0.05, sample_stride=100)
            assert tr.rho_ee[-1] < 1e-6


class TestPhaseCovariance:
    def test_single_tone_gauge_invariance(self, emitter):
        """A global optical phase is a gauge transform of |g>."""
        base = dict(nu_rabi=120.0, nu_detuning=-900.0)
        ph = PhononDrive(900.0, beta=0.5, phi_m=0.7)
        tr1 = evolve(ground_state(),
                     DriveConfig((OpticalTone(phase=0.3, **base),), ph),
                     emitter, t_span=30.0)
        tr2 = evolve(ground_state(),
                     DriveConfig((OpticalTone(phase=0.3 + 1.234, **base),), ph),
                     emitter, t_span=30.0)
        assert np.abs(tr1.rho_ee - tr2.rho_ee).max() < 1e-10

    def test_two_tone_relative_phase_only(self, emitter):
        ph = PhononDrive(900.0, beta=0.5)
        shift = 0.77

        def run(p1, p2):
            cfg = DriveConfig((OpticalTone(40.0, -900.0, p1),
                               OpticalTone(10.0, 0.0, p2)), ph)
            return evolve(ground_state(), cfg, emitter, t_span=30.0).rho_ee

        common = run(0.2 + shift, 1.1 + shift)
        assert np.abs(run(0.2, 1.1) - common).max() < 1e-10
        relative = run(0.2, 1.1 + 0.5)
        assert np.abs(run(0.2, 1.1) - relative).max() > 1e-4


class TestScaleInvariance:
    def test_dimensionless_trajectories(self):
        """Scaling all rates by s and time by 1/s leaves populations
        (vs scaled time) unchanged."""
        s = 3.0

        def traj(scale):
            em = EmitterParams(nu_gamma=13.3 * scale, nu_phi=2.0 * scale,
                               sd_fwhm=0.0)
            cfg = DriveConfig(
                tones=(OpticalTone(100.0 * scale, -600.0 * scale, 0.4),),
                phonon=PhononDrive(600.0 * scale, beta=0.5, phi_m=0.9))
            return evolve(ground_state(), cfg, em, t_span=40.0 / scale,
                          dt=0.01 / scale, sample_stride=40)

        t1, t2 = traj(1.0), traj(s)
        assert np.abs(t1.rho_ee - t2.rho_ee).max() < 1e-9


class TestSteadyState:
    def test_saturation_limit(self, emitter):
        assert steady_state_excited_population(0.0, 1e6, emitter) == \
            pytest.approx(0.5, abs=1e-6)
        assert steady_state_excited_population(0.0, 0.0, emitter) == 0.0

    def test_matches_long_time_average(self, emitter):
        # (Delta, Omega_0, Gamma, gamma_phi)/2pi = (100, 65, 13.3, 0) MHz
        cfg = DriveConfig(tones=(OpticalTone(65.0, 100.0),))
        drive = compile_drive(cfg)
        avg = quasi_steady_excited(drive, emitter,
                                   transient_ns=16.0 / emitter.gamma)[0]
        assert avg == pytest.approx(
            steady_state_excited_population(100.0, 65.0, emitter), abs=1e-4)

    def test_window_validation(self, emitter):
        drive = compile_drive(DriveConfig(tones=(OpticalTone(65.0, 0.0),)))
        with pytest.raises(ValueError):
            quasi_steady_excited(drive, emitter, window_ns=1.0)
        with pytest.raises(ValueError):
            quasi_steady_excited(drive, emitter, transient_ns=1.0)


class TestPowerBroadenedFwhm:
    def test_natural_linewidth(self, emitter):
        assert power_broadened_fwhm(0.0, emitter) == pytest.approx(13.3)

    def test_asymptotic_slope(self, emitter):
        lo, hi = power_broadened_fwhm(2e3, emitter), power_broadened_fwhm(2e4, emitter)
        slope = math.log(hi / lo) / math.log(10.0)
        assert slope == pytest.approx(1.0, abs=0.02)

    def test_matches_numeric_scan(self, emitter):
        """Scan-and-interpolate oracle for the half-maximum points."""
        nu_rabi = 80.0
        deltas = np.linspace(0.0, 600.0, 4001)
        prof = steady_state_excited_population(deltas, nu_rabi, emitter)
        half = prof[0] / 2.0
        idx = int(np.argmax(prof < half))
        x1, x2 = deltas[idx - 1], deltas[idx]
        y1, y2 = prof[idx - 1], prof[idx]
        hwhm = x1 + (half - y1) * (x2 - x1) / (y2 - y1)
        assert 2.0 * hwhm == pytest.approx(
            power_broadened_fwhm(nu_rabi, emitter), rel=5e-3)


class TestFluorescence:
    def test_values(self, emitter):
        assert fluorescence_rate(0.0, emitter) == 0.0
        assert float(fluorescence_rate(0.5, emitter, 1.0)) == pytest.approx(
            0.0418, abs=0.0001)
        assert float(fluorescence_rate(0.4, emitter)) == pytest.approx(
            2.0 * float(fluorescence_rate(0.2, emitter)), rel=1e-12)

    def test_eta_validation(self, emitter):
        with pytest.raises(ValueError):
            fluorescence_rate(0.1, emitter, collection_eta=1.5)


class TestConvergenceOrder:
    def test_rk4_order(self, emitter):
        cfg = DriveConfig(tones=(OpticalTone(150.0, -700.0, 0.2),),
                          phonon=PhononDrive(700.0, beta=0.5, phi_m=0.4))

        def final_ee(dt):
            return evolve(ground_state(), cfg, emitter, t_span=20.0,
                          dt=dt, sample_stride=int(round(20.0 / dt))
                          ).rho_ee[-1]

        base = 0.02
        ref = final_ee(base / 16)
        err1 = abs(final_ee(base) - ref)
        err2 = abs(final_ee(base / 2) - ref)
        order = math.log2(err1 / err2)
        assert 3.5 <= order <= 4.5

    def test_halving_dt_small_change(self, emitter):
        cfg = DriveConfig(tones=(OpticalTone(100.0, -900.0),),
                          phonon=PhononDrive(900.0, beta=0.455))
        a = evolve(ground_state(), cfg, emitter, t_span=20.0, dt=0.005,
                   sample_stride=4000).rho_ee[-1]
        b = evolve(ground_state(), cfg, emitter, t_span=20.0, dt=0.0025,
                   sample_stride=8000).rho_ee[-1]
        assert abs(a - b) < 1e-6
