"""Tests for spectral density families, rescaling and classification.

Expected values are frozen from independent oracles: closed-form
antiderivatives where available, scipy.integrate.quad otherwise.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bathchain.errors import DivergentIntegral, InvalidParameter
from bathchain.specdens import (
    SpectralDensity,
    SzegoVerdict,
    adolphs_renger,
    coupling_measure,
    overdamped_brownian,
    power_law,
    reorganization_energy,
    szego_class_check,
    tabulated,
    to_unit_measure,
    total_integral,
)

FOUR_PI = 4.0 * math.pi


class TestPowerLaw:
    def test_flat_case(self):
        j = power_law(1.0, 0.0, 1.0)
        for w in (0.0, 0.3, 0.99, 1.0):
            assert float(j.continuous(w)) == pytest.approx(1.0)
        assert j.lines == ()

    def test_direct_evaluation(self):
        j = power_law(0.1, 1.0, 1000.0)
        assert float(j.continuous(100.0)) == pytest.approx(10.0, rel=1e-14)

    def test_zero_outside_support(self):
        j = power_law(0.1, 1.0, 1000.0)
        assert float(j.continuous(1000.5)) == 0.0
        assert float(j.continuous(-1.0)) == 0.0

    def test_invalid_exponent(self):
        with pytest.raises(InvalidParameter):
            power_law(1.0, -1.5, 1.0)

    def test_invalid_amplitude(self):
        with pytest.raises(InvalidParameter):
            power_law(-0.2, 1.0, 1.0)


class TestOverdampedBrownian:
    def test_peak_value(self):
        # J(gamma) = 8*lam*gamma^2/(2 gamma^2) = 4*lam
        j = overdamped_brownian(100.0, 53.0, 1000.0)
        assert float(j.continuous(53.0)) == pytest.approx(400.0, rel=1e-14)

    def test_reorganization_energy_closed_form(self):
        # (1/4pi) int 8 lam gamma/(w^2+g^2) dw = lam*(2/pi)*arctan(wc/g)
        lam, gamma, wc = 100.0, 53.0, 1000.0
        j = overdamped_brownian(lam, gamma, wc)
        expected = lam * (2.0 / math.pi) * math.atan(wc / gamma)
        assert reorganization_energy(j) == pytest.approx(expected, rel=1e-8)
        assert expected == pytest.approx(96.6, abs=0.05)

    def test_reorganization_energy_large_cutoff(self):
        lam, gamma = 7.5, 20.0
        j = overdamped_brownian(lam, gamma, 1e6 * gamma)
        assert reorganization_energy(j) == pytest.approx(lam, rel=1e-4)

    def test_small_gamma_limit(self):
        j = overdamped_brownian(100.0, 1e-9, 1000.0)
        assert float(j.continuous(10.0)) < 1e-6

    def test_default_cutoff(self):
        j = overdamped_brownian(10.0, 53.0)
        assert j.omega_c == pytest.approx(20.0 * 53.0)

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            overdamped_brownian(-1.0, 53.0)
        with pytest.raises(InvalidParameter):
            overdamped_brownian(100.0, 0.0)


class TestAdolphsRenger:
    PARAMS = dict(lam=100.0, s_h=0.22, omega_h=180.0, omega_1=0.5,
                  omega_2=1.95, omega_c=1000.0)

    def test_line_placement_and_weight(self):
        j = adolphs_renger(**self.PARAMS)
        assert len(j.lines) == 1
        om, w = j.lines[0]
        assert om == 180.0
        assert w == pytest.approx(FOUR_PI * 0.22 * 180.0**2, rel=1e-14)

    def test_no_line_when_decoupled(self):
        j = adolphs_renger(**{**self.PARAMS, "s_h": 0.0})
        assert j.lines == ()

    def test_continuous_mass_against_quadrature_oracle(self):
        # frozen from scipy.integrate.quad over [0, omega_c]
        j = adolphs_renger(**{**self.PARAMS, "s_h": 0.0})
        oracle = 227320.11470506847
        assert total_integral(j) == pytest.approx(oracle, rel=1e-8)

    def test_reorganization_energy(self):
        # continuous part is normalized to lam (99.92 after the omega_c
        # truncation, frozen from quad); the line adds s_h*omega_h = 39.6
        j = adolphs_renger(**self.PARAMS)
        assert reorganization_energy(j) == pytest.approx(99.91990149699161 + 39.6,
                                                         rel=1e-6)

    def test_line_above_cutoff_rejected(self):
        with pytest.raises(InvalidParameter):
            adolphs_renger(**{**self.PARAMS, "omega_h": 1500.0})


class TestReorganizationEnergy:
    def test_zero_density(self):
        j = SpectralDensity(lambda w: np.zeros_like(np.asarray(w, float)), 1.0)
        assert reorganization_energy(j) == pytest.approx(0.0, abs=1e-12)

    def test_single_line(self):
        j = SpectralDensity(lambda w: np.zeros_like(np.asarray(w, float)), 1000.0,
                            lines=((180.0, FOUR_PI * 0.22 * 180.0**2),))
        assert reorganization_energy(j) == pytest.approx(0.22 * 180.0, rel=1e-12)

    def test_divergent_at_origin(self):
        with pytest.raises(DivergentIntegral):
            reorganization_energy(power_law(1.0, 0.0, 1.0))
        with pytest.raises(DivergentIntegral):
            reorganization_energy(power_law(1.0, -0.5, 1.0))

    def test_divergence_detected_numerically_for_custom_density(self):
        j = SpectralDensity(lambda w: np.ones_like(np.asarray(w, float)), 1.0)
        with pytest.raises(DivergentIntegral):
            reorganization_energy(j)

    @pytest.mark.parametrize("c", [0.25, 3.0])
    def test_linear_in_overall_scale(self, c):
        base = overdamped_brownian(100.0, 53.0, 1000.0)
        scaled = SpectralDensity(lambda w: c * base.continuous(w), 1000.0)
        assert reorganization_energy(scaled) == pytest.approx(
            c * reorganization_energy(base), rel=1e-10)


class TestToUnitMeasure:
    def test_flat(self):
        m = to_unit_measure(power_law(1.0, 0.0, 1.0))
        ks = np.linspace(0.01, 1.0, 7)
        assert np.allclose(np.asarray(m.weight(ks)), 1.0)
        assert m.total_mass == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("alpha,s,wc", [(0.1, 1.0, 1000.0), (2.0, 0.5, 5.0),
                                            (1.0, 3.0, 200.0)])
    def test_power_law_mass(self, alpha, s, wc):
        # int_0^wc alpha wc^(1-s) w^s dw = alpha*wc^2/(1+s)
        m = to_unit_measure(power_law(alpha, s, wc))
        assert m.total_mass == pytest.approx(alpha * wc**2 / (1.0 + s), rel=1e-10)
        assert float(m.weight(0.5)) == pytest.approx(alpha * wc**2 * 0.5**s,
                                                     rel=1e-12)

    def test_line_rescaling(self):
        j = SpectralDensity(lambda w: np.zeros_like(np.asarray(w, float)), 100.0,
                            lines=((50.0, 7.0),))
        m = to_unit_measure(j)
        assert m.lines == ((0.5, 7.0),)
        assert m.total_mass == pytest.approx(7.0)

    def test_mass_preserved(self):
        j = overdamped_brownian(100.0, 53.0, 1000.0)
        m = to_unit_measure(j)
        unit_mass, _ = quad(lambda k: float(m.weight(k)), 0.0, 1.0, limit=200)
        direct, _ = quad(lambda w: float(j.continuous(w)), 0.0, 1000.0, limit=200)
        assert unit_mass == pytest.approx(direct, rel=1e-10)
        assert m.total_mass == pytest.approx(direct, rel=1e-10)


class TestCouplingMeasure:
    def test_scaled_by_four_pi(self):
        j = overdamped_brownian(100.0, 53.0, 1000.0)
        unit = to_unit_measure(j)
        cpl = coupling_measure(j)
        assert cpl.total_mass == pytest.approx(unit.total_mass / FOUR_PI)
        ks = np.linspace(0.05, 0.95, 7)
        assert np.allclose(np.asarray(cpl.weight(ks)),
                           np.asarray(unit.weight(ks)) / FOUR_PI)

    def test_line_couples_at_huang_rhys_strength(self):
        # a line of weight 4*pi*S*w^2 couples one oscillator at sqrt(S)*w:
        # ~84 cm^-1 for S=0.22, w=180
        j = adolphs_renger(100.0, 0.22, 180.0, 0.5, 1.95, 1000.0)
        cpl = coupling_measure(j)
        (_, w_line), = cpl.lines
        assert math.sqrt(w_line) == pytest.approx(math.sqrt(0.22) * 180.0,
                                                  rel=1e-12)
        assert math.sqrt(w_line) == pytest.approx(84.4, abs=0.1)

    def test_polaron_shift_equals_reorganization_energy(self):
        # sum of coupling^2/omega over the measure = (1/4pi) int J/omega
        j = overdamped_brownian(100.0, 53.0, 1000.0)
        cpl = coupling_measure(j)
        shift, _ = quad(lambda k: float(cpl.weight(k)) / (k * 1000.0), 1e-9, 1.0,
                        limit=200)
        assert shift == pytest.approx(reorganization_energy(j), rel=1e-6)


class TestSzegoCheck:
    def test_flat_in_class(self):
        m = to_unit_measure(power_law(1.0, 0.0, 1.0))
        assert szego_class_check(m, 1e-3) is SzegoVerdict.IN_CLASS

    def test_power_law_s3_in_class(self):
        # ln k is integrable against the arcsine weight
        m = to_unit_measure(power_law(1.0, 3.0, 1.0))
        assert szego_class_check(m, 1e-3) is SzegoVerdict.IN_CLASS

    def test_band_gap_out_of_class(self):
        def gap(w):
            w = np.asarray(w, dtype=float)
            return np.where((w >= 0.4) & (w <= 0.6), 0.0, 1.0)

        m = to_unit_measure(SpectralDensity(gap, 1.0))
        assert szego_class_check(m, 1e-3) is SzegoVerdict.OUT_OF_CLASS

    def test_essential_zero_out_of_class(self):
        # weight ~ exp(-1/k) decays faster than any power: outside the class
        def hard(w):
            w = np.asarray(w, dtype=float)
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(w > 0, np.exp(-1.0 / np.maximum(w, 1e-300)), 0.0)

        m = to_unit_measure(SpectralDensity(hard, 1.0))
        assert szego_class_check(m, 1e-3) is SzegoVerdict.OUT_OF_CLASS


class TestTabulated:
    def test_interpolation_and_range(self):
        j = tabulated([1.0, 2.0, 3.0], [0.0, 4.0, 0.0])
        assert float(j.continuous(1.5)) == pytest.approx(2.0)
        assert float(j.continuous(0.5)) == 0.0
        assert float(j.continuous(3.5)) == 0.0
        assert j.omega_c == 3.0

    def test_rejects_negative(self):
        with pytest.raises(InvalidParameter):
            tabulated([1.0, 2.0], [1.0, -0.5])


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.01, 10.0), s=st.floats(-0.9, 4.0),
       wc=st.floats(0.1, 2000.0))
def test_power_law_nonnegative(alpha, s, wc):
    j = power_law(alpha, s, wc)
    w = np.linspace(0.0, wc, 101)[1:]
    assert np.all(np.asarray(j.continuous(w)) >= 0.0)


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.1, 500.0), gamma=st.floats(0.5, 300.0))
def test_obo_nonnegative(lam, gamma):
    j = overdamped_brownian(lam, gamma)
    w = np.linspace(0.0, j.omega_c, 101)
    assert np.all(np.asarray(j.continuous(w)) >= 0.0)


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(1.0, 300.0), s_h=st.floats(0.0, 1.0))
def test_adolphs_renger_nonnegative(lam, s_h):
    j = adolphs_renger(lam, s_h, 180.0, 0.5, 1.95, 1000.0)
    w = np.linspace(0.0, 1000.0, 101)
    assert np.all(np.asarray(j.continuous(w)) >= 0.0)
