import math

import numpy as np
import pytest
from scipy.special import jv

from sideband_sim import (Calibration, MaterialParams, bessel_j,
                          beta_to_g_sqrt_n, default_max_order,
                          g_sqrt_n_to_beta, jacobi_anger_components,
                          optical_power_to_rabi,
                          red_sideband_resonance_detuning, rf_power_to_beta,
                          saw_amplitude, sideband_rabi,
                          single_phonon_coupling)


def bessel_series_oracle(k, x, terms=20):
    """Independent ascending-series evaluation of J_k(x)."""
    total = 0.0
    for m in range(terms):
        total += (-1.0) ** m * (x / 2.0) ** (2 * m + k) / (
            math.factorial(m) * math.factorial(m + k))
    return total


class TestSinglePhononCoupling:
    def test_order_two_mhz(self):
        # 1 pg oscillator at 900 MHz: coupling of order 2 MHz
        g = single_phonon_coupling(MaterialParams(), 900.0)
        assert 1.9 * 0.8 <= g <= 1.9 * 1.2

    def test_mass_scaling(self):
        m = MaterialParams()
        m4 = MaterialParams(mass=4e-15)
        assert single_phonon_coupling(m4, 900.0) == pytest.approx(
            single_phonon_coupling(m, 900.0) / 2.0, rel=1e-12)

    def test_frequency_scaling(self):
        # k_m ~ omega_m and zpf ~ 1/sqrt(omega_m): g(225) = g(900)/2
        m = MaterialParams()
        assert single_phonon_coupling(m, 225.0) == pytest.approx(
            single_phonon_coupling(m, 900.0) / 2.0, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            single_phonon_coupling(MaterialParams(), -1.0)
        with pytest.raises(ValueError):
            MaterialParams(mass=0.0)


class TestSidebandRabi:
    def test_rabi_operating_point(self):
        # Omega/Omega_0 = 66/290 corresponds to beta = 0.455
        beta = 2.0 * 66.0 / 290.0
        assert beta == pytest.approx(0.455, abs=2e-3)
        assert sideband_rabi(290.0, beta) == pytest.approx(66.0, rel=1e-12)

    def test_no_phonon_drive(self):
        assert sideband_rabi(123.0, 0.0) == 0.0

    def test_arithmetic(self):
        assert sideband_rabi(100.0, 0.2) == pytest.approx(10.0, rel=1e-12)

    def test_gn_substitution_identity(self, rng):
        # Omega = g sqrt(n) Omega_0 / omega_m under beta = 2 g sqrt(n)/omega_m
        for _ in range(50):
            nu_rabi = rng.uniform(1.0, 500.0)
            g_sqrt_n = rng.uniform(0.0, 300.0)
            nu_m = rng.uniform(100.0, 1500.0)
            beta = g_sqrt_n_to_beta(g_sqrt_n, nu_m)
            assert sideband_rabi(nu_rabi, beta) == pytest.approx(
                g_sqrt_n * nu_rabi / nu_m, rel=1e-12)
            assert beta_to_g_sqrt_n(beta, nu_m) == pytest.approx(
                g_sqrt_n, rel=1e-12)


class TestSawAmplitude:
    def test_reported_displacement(self):
        a = saw_amplitude(66.0, 290.0, 5600.0, 6.1e8)
        assert 0.665 <= a <= 0.735

    def test_zero(self):
        assert saw_amplitude(0.0, 290.0, 5600.0, 6.1e8) == 0.0

    def test_linearity(self):
        a1 = saw_amplitude(33.0, 290.0, 5600.0, 6.1e8)
        a2 = saw_amplitude(66.0, 290.0, 5600.0, 6.1e8)
        assert a2 == pytest.approx(2.0 * a1, rel=1e-12)

    def test_round_trip(self, rng):
        # invert A_SAW -> Omega and back
        for _ in range(20):
            nu_omega = rng.uniform(1.0, 100.0)
            nu_rabi = rng.uniform(100.0, 500.0)
            v = rng.uniform(3000.0, 8000.0)
            d = rng.uniform(1e8, 1e9)
            a = saw_amplitude(nu_omega, nu_rabi, v, d)
            d_si = 2.0 * math.pi * d * 1e6
            nu_omega_back = (a * 1e-12) * d_si * nu_rabi / (2.0 * v)
            a_back = saw_amplitude(nu_omega_back, nu_rabi, v, d)
            assert a_back == pytest.approx(a, rel=1e-12)

    def test_zero_rabi_guard(self):
        with pytest.raises(ValueError):
            saw_amplitude(66.0, 0.0, 5600.0, 6.1e8)


class TestPowerConversions:
    def test_rf_zero(self):
        assert rf_power_to_beta(0.0, 478.0, 900.0) == 0.0

    def test_rf_sqrt_scaling(self):
        b1 = rf_power_to_beta(0.05, 478.0, 900.0)
        b2 = rf_power_to_beta(0.2, 478.0, 900.0)
        assert b2 == pytest.approx(2.0 * b1, rel=1e-12)

    def test_rf_calibration_convention(self):
        # reference point: beta = 0.455 at P_RF = 0.2 W, nu_m = 940 MHz
        cal = Calibration()
        assert rf_power_to_beta(0.2, cal.eta_rf, 940.0) == pytest.approx(
            0.455, rel=1e-12)
        assert rf_power_to_beta(0.05, cal.eta_rf, 940.0) == pytest.approx(
            0.2275, rel=1e-12)

    def test_optical(self):
        assert optical_power_to_rabi(0.4, 65.0) == pytest.approx(41.11, abs=0.01)
        assert optical_power_to_rabi(0.0, 65.0) == 0.0
        assert optical_power_to_rabi(1.0, 65.0) == pytest.approx(65.0)

    def test_negative_power(self):
        with pytest.raises(ValueError):
            optical_power_to_rabi(-1.0, 65.0)


class TestBesselJ:
    def test_j0_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0

    def test_j1_at_zero(self):
        assert bessel_j(1, 0.0) == 0.0

    def test_first_zero_of_j0(self):
        assert abs(bessel_j(0, 2.404825557695773)) < 1e-4

    def test_against_series_oracle(self):
        for k in range(0, 5):
            for x in np.linspace(-2.0, 2.0, 21):
                assert bessel_j(k, x) == pytest.approx(
                    bessel_series_oracle(k, x), abs=1e-13)

    def test_against_scipy_on_supported_range(self):
        for k in range(0, 6):
            for x in np.linspace(-8.0, 8.0, 33):
                assert abs(bessel_j(k, x) - jv(k, x)) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_j(0, 9.0)
        with pytest.raises(ValueError):
            bessel_j(-1, 1.0)


class TestJacobiAnger:
    def test_beta_zero(self):
        exp = jacobi_anger_components(0.0, 0.0, 900.0, 0)
        assert len(exp.components) == 1
        assert exp.components[0].order == 0
        assert exp.components[0].weight == 1.0
        assert exp.complete

    def test_j1_value(self):
        exp = jacobi_anger_components(0.455, 0.0, 900.0, 4)
        assert exp.weight(1) == pytest.approx(
            bessel_series_oracle(1, 0.455), abs=1e-13)
        assert exp.weight(1) == pytest.approx(0.221663, abs=1e-5)

    def test_small_argument_limit(self):
        for beta in (0.05, 0.1, 0.2):
            exp = jacobi_anger_components(beta, 0.0, 900.0, 3)
            assert exp.weight(1) == pytest.approx(beta / 2.0, rel=1e-2)

    def test_effective_detunings(self):
        exp = jacobi_anger_components(0.3, -900.0, 900.0, 2)
        by_order = {c.order: c.nu_effective for c in exp.components}
        assert by_order[1] == pytest.approx(0.0)
        assert by_order[0] == pytest.approx(-900.0)
        assert by_order[-1] == pytest.approx(-1800.0)

    def test_antisymmetry(self):
        exp = jacobi_anger_components(0.7, 0.0, 900.0, 3)
        assert exp.weight(-1) == pytest.approx(-exp.weight(1), rel=1e-12)
        assert exp.weight(-2) == pytest.approx(exp.weight(2), rel=1e-12)

    def test_truncation_flag(self):
        assert not jacobi_anger_components(1.0, 0.0, 900.0, 0).complete
        k = default_max_order(1.0)
        assert jacobi_anger_components(1.0, 0.0, 900.0, k).complete


class TestResonanceTracking:
    def test_weak_drive_limit(self):
        # at vanishing optical power the resonance sits at -nu_m
        assert red_sideband_resonance_detuning(1e-3, 0.455, 940.0) == \
            pytest.approx(-940.0, abs=1e-6)

    def test_carrier_shift_dominates(self):
        # shift is dominated by (J_0 Omega_0)^2 / (2 nu_m)
        det = red_sideband_resonance_detuning(290.0, 0.455, 940.0)
        j0 = bessel_series_oracle(0, 0.455)
        approx = -940.0 + (j0 * 290.0) ** 2 / (2.0 * 940.0)
        assert det == pytest.approx(approx, abs=1.5)
