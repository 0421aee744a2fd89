import dataclasses
import math

import numpy as np
import pytest

from sideband_sim import (BinnedCounts, EmitterParams, InterferenceConfig,
                          RabiSequenceConfig, bessel_j, fit_damped_sinusoid,
                          fit_phase_fringe, interference_scan_aom,
                          interference_scan_phase, rabi_sequence)
from sideband_sim.exceptions import RestTimeError
from sideband_sim.fitting import line_through_origin, lm_fit
from sideband_sim.lindblad import plan_quasi_steady_window
from sideband_sim.hamiltonian import compile_drive


class TestRabiSequenceConfig:
    def test_bin_vs_pulse_validation(self):
        with pytest.raises(ValueError):
            RabiSequenceConfig(bin_ns=100.0, pulse_ns=90.0)

    def test_rest_time_floor(self, emitter):
        cfg = RabiSequenceConfig(rest_ns=20.0)  # 5/Gamma is ~60 ns
        with pytest.raises(RestTimeError):
            rabi_sequence(cfg, emitter)

    def test_resonance_tracked_default(self):
        cfg = RabiSequenceConfig()
        # the carrier light shift moves the resonance toward the carrier
        assert -cfg.nu_m < cfg.resolved_detuning() < -cfg.nu_m + 100.0
        explicit = RabiSequenceConfig(nu_detuning=-940.0)
        assert explicit.resolved_detuning() == -940.0


class TestRabiSequence:
    def test_bin_count(self, emitter):
        counts = rabi_sequence(RabiSequenceConfig(), emitter)
        assert len(counts.expected) == math.floor(90.0 / 2.8)
        assert counts.bin_width == 2.8

    def test_operating_point_frequency(self, emitter):
        counts = rabi_sequence(RabiSequenceConfig(), emitter)
        fit = fit_damped_sinusoid(counts)
        assert fit.converged and not fit.ambiguous
        assert fit.frequency_mhz == pytest.approx(66.0, rel=0.05)
        # exact sideband rate: J_1(beta) * Omega_0
        assert fit.frequency_mhz == pytest.approx(
            bessel_j(1, 0.455) * 290.0, rel=0.02)

    def test_no_phonon_no_oscillation(self, emitter):
        counts = rabi_sequence(RabiSequenceConfig(beta=0.0), emitter)
        fit = fit_damped_sinusoid(counts)
        assert fit.ambiguous
        # only the weak off-resonant carrier background
        assert counts.expected.max() < 0.05 * 100

    def test_sqrt_rf_power_scaling(self, emitter):
        scales = (1.0, 0.5, 0.25)
        freqs = []
        for s in scales:
            cfg = RabiSequenceConfig(beta=0.455 * math.sqrt(s))
            freqs.append(fit_damped_sinusoid(rabi_sequence(cfg, emitter))
                         .frequency_mhz)
        slope, r2 = line_through_origin(np.sqrt(scales), np.array(freqs))
        assert r2 > 0.99
        assert freqs[1] / freqs[0] == pytest.approx(1 / math.sqrt(2), rel=0.03)
        assert freqs[2] / freqs[0] == pytest.approx(0.5, rel=0.03)

    def test_determinism(self, emitter):
        cfg = RabiSequenceConfig(seed=42, shots=50)
        a = rabi_sequence(cfg, emitter)
        b = rabi_sequence(cfg, emitter)
        assert np.array_equal(a.expected, b.expected)
        assert np.array_equal(a.sampled, b.sampled)

    def test_seed_changes_samples_not_expectation(self, emitter):
        a = rabi_sequence(RabiSequenceConfig(seed=1, shots=50), emitter)
        b = rabi_sequence(RabiSequenceConfig(seed=2, shots=50), emitter)
        assert np.array_equal(a.expected, b.expected)
        assert not np.array_equal(a.sampled, b.sampled)

    def test_no_seed_no_samples(self, emitter):
        assert rabi_sequence(RabiSequenceConfig(), emitter).sampled is None


class TestFitDampedSinusoid:
    def test_exact_round_trip(self):
        t = np.arange(40) * 2.8 + 1.4
        y = 3.0 * np.exp(-t / 55.0) * np.cos(2 * np.pi * 0.066 * t + 0.4) + 5.0
        fit = fit_damped_sinusoid((t, y))
        assert fit.frequency_mhz == pytest.approx(66.0, rel=1e-6)
        assert fit.decay_ns == pytest.approx(55.0, rel=1e-6)
        assert fit.amplitude == pytest.approx(3.0, rel=1e-6)
        assert fit.phase == pytest.approx(0.4, abs=1e-6)
        assert fit.offset == pytest.approx(5.0, rel=1e-6)
        assert fit.converged

    def test_binning_bias(self):
        """2.8 ns bins on a 66 MHz oscillation (~5.4 bins/period):
        frequency recovered to +-2% relative to the unbinned fit."""
        def trace(ts):
            return (2.0 * np.exp(-ts / 40.0)
                    * np.cos(2 * np.pi * 0.066 * ts + 0.2) + 4.0)

        fine = np.linspace(0.0, 89.6, 4481)
        nu_unbinned = fit_damped_sinusoid((fine, trace(fine))).frequency_mhz
        edges = np.arange(33) * 2.8
        binned = np.array([trace(np.linspace(a, b, 57)).mean()
                           for a, b in zip(edges[:-1], edges[1:])])
        centers = edges[:-1] + 1.4
        nu_binned = fit_damped_sinusoid((centers, binned)).frequency_mhz
        assert nu_binned == pytest.approx(nu_unbinned, rel=0.02)

    def test_poisson_repeatability(self, emitter):
        """~1e4 total counts: frequency within +-5% across 50 seeds."""
        base = rabi_sequence(RabiSequenceConfig(shots=40), emitter)
        total = base.expected.sum()
        assert 5e3 < total < 5e4
        nu_ref = fit_damped_sinusoid(base).frequency_mhz
        for seed in range(50):
            rng = np.random.default_rng(seed)
            noisy = BinnedCounts(base.bin_starts, base.bin_width,
                                 base.expected,
                                 rng.poisson(base.expected))
            nu = fit_damped_sinusoid(noisy).frequency_mhz
            assert nu == pytest.approx(nu_ref, rel=0.05)

    def test_minimum_bins(self):
        t = np.arange(10) * 2.8
        with pytest.raises(ValueError):
            fit_damped_sinusoid((t, np.cos(t)))


class TestPhaseFringe:
    def test_sinusoid_and_period(self, emitter):
        cfg = InterferenceConfig()
        phi = np.linspace(0.0, 2 * np.pi, 41, endpoint=False)
        phi, y = interference_scan_phase(phi, cfg, emitter)
        amp, phi0, offset, rel = fit_phase_fringe(phi, y)
        assert rel < 0.03
        # free-period fit confirms 2 pi periodicity within 1%
        def model(p):
            return p[0] * np.cos(p[1] * phi + p[2]) + p[3] - y

        def jac(p):
            th = p[1] * phi + p[2]
            out = np.empty((len(phi), 4))
            out[:, 0] = np.cos(th)
            out[:, 1] = -p[0] * np.sin(th) * phi
            out[:, 2] = -p[0] * np.sin(th)
            out[:, 3] = 1.0
            return out

        params, ok, _ = lm_fit(model, jac, [amp, 1.0, phi0, offset])
        assert ok
        assert abs(params[1]) == pytest.approx(1.0, abs=0.01)

    def test_requires_resonance(self, emitter):
        cfg = InterferenceConfig(nu_aom=901.0)
        with pytest.raises(ValueError):
            interference_scan_phase(np.linspace(0, 6, 7), cfg, emitter)

    def test_single_pathway_flat(self, emitter):
        cfg = InterferenceConfig()
        phi = np.linspace(0.0, 2 * np.pi, 21, endpoint=False)
        _, y2 = interference_scan_phase(phi, cfg, emitter)
        a2, _, c2, _ = fit_phase_fringe(phi, y2)
        for knock in ("nu_rabi_carrier", "beta"):
            cfg1 = dataclasses.replace(cfg, **{knock: 0.0})
            _, y1 = interference_scan_phase(phi, cfg1, emitter)
            a1, _, c1, _ = fit_phase_fringe(phi, y1)
            assert a1 / c1 < 0.01 * (a2 / c2)

    def test_aom_phase_shifts_fringe(self, emitter):
        cfg = InterferenceConfig()
        phi = np.linspace(0.0, 2 * np.pi, 41, endpoint=False)
        _, y0 = interference_scan_phase(phi, cfg, emitter)
        _, phi0_a, _, _ = fit_phase_fringe(phi, y0)
        delta = 0.9
        cfgb = dataclasses.replace(cfg, phi_aom=cfg.phi_aom + delta)
        _, yb = interference_scan_phase(phi, cfgb, emitter)
        _, phi0_b, _, _ = fit_phase_fringe(phi, yb)
        shift = (phi0_b - phi0_a + np.pi) % (2 * np.pi) - np.pi
        assert shift == pytest.approx(-delta, abs=0.05)

    def test_global_optical_phase_invariance(self, emitter):
        """Only the three-wave relative phase matters."""
        cfg = InterferenceConfig()
        phi = np.linspace(0.0, 2 * np.pi, 11, endpoint=False)
        _, y0 = interference_scan_phase(phi, cfg, emitter)
        cfgq = dataclasses.replace(cfg, phase_sideband=cfg.phase_sideband + 1.3,
                                   phi_aom=cfg.phi_aom + 1.3)
        _, yq = interference_scan_phase(phi, cfgq, emitter)
        assert np.abs(y0 - yq).max() < 1e-8


class TestAomScan:
    def test_resonance_peak_and_width(self, emitter):
        """Resonance at nu_aom = nu_m; profile matches the finite-window
        average of the beat note (the derived oracle)."""
        cfg = InterferenceConfig()
        grid = cfg.nu_m + np.linspace(-1.0, 1.0, 81)
        nu, y = interference_scan_aom(grid, cfg, emitter)
        i0 = np.argmin(np.abs(nu - cfg.nu_m))
        far = 0.5 * (y[0] + y[-1])
        assert y[i0] > far  # peak for the default phi_m = pi

        # oracle: S(f) - S_inf ~ sinc(pi f T) cos(2 pi f (t0 + T/2))
        drive = compile_drive(cfg.drive())
        dt, n_skip, n_steps = plan_quasi_steady_window(
            drive, emitter, window_ns=cfg.t_int_ns)
        t0, t_win = n_skip * dt, (n_steps - n_skip) * dt
        f = (nu - cfg.nu_m) * 1e-3  # 1/ns
        x = np.pi * f * t_win
        oracle = np.sinc(x / np.pi) * np.cos(2 * np.pi * f * (t0 + t_win / 2))
        signal = (y - far) / (y[i0] - far)
        assert np.abs(signal - oracle).max() < 0.05

    def test_width_scales_inversely_with_t_int(self, emitter):
        cfg = InterferenceConfig()

        def fwhm(t_int):
            span = 2.0 * 2000.0 / t_int
            grid = cfg.nu_m + np.linspace(-span / 2, span / 2, 161)
            nu, y = interference_scan_aom(grid, cfg, emitter, t_int_ns=t_int)
            far = 0.5 * (y[0] + y[-1])
            sig = np.abs(y - far)
            half = sig.max() / 2.0
            above = nu[sig >= half]
            return above.max() - above.min()

        w1, w2 = fwhm(2000.0), fwhm(4000.0)
        assert w1 / w2 == pytest.approx(2.0, rel=0.2)

    def test_far_off_resonance_incoherent_sum(self, emitter):
        """Washed-out interference: fluorescence = sum of the two
        single-pathway signals."""
        cfg = InterferenceConfig()
        far_grid = np.array([cfg.nu_m - 25.0, cfg.nu_m + 25.0])
        _, y_both = interference_scan_aom(far_grid, cfg, emitter)
        _, y_sb = interference_scan_aom(
            far_grid, dataclasses.replace(cfg, nu_rabi_carrier=0.0), emitter)
        _, y_ca = interference_scan_aom(
            far_grid, dataclasses.replace(cfg, nu_rabi_sideband=0.0), emitter)
        assert y_both == pytest.approx(y_sb + y_ca, rel=0.02)

    def test_scan_determinism(self, emitter):
        cfg = InterferenceConfig()
        grid = cfg.nu_m + np.linspace(-0.5, 0.5, 11)
        _, y1 = interference_scan_aom(grid, cfg, emitter)
        _, y2 = interference_scan_aom(grid, cfg, emitter)
        assert np.array_equal(y1, y2)
