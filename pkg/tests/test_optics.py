"""Two-level and pair correlators, coupling constant."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from blinkcorr.optics import (
    DipoleCoupling,
    SingularityError,
    TwoLevelParams,
    dipole_coupling,
    g1_correlation,
    g2_pair_correlation,
    g2_zero,
    g2_sine_numerator,
    intensity_pair,
    intensity_single,
)

from conftest import rk4_two_level_g


def g2_literal(A, Om, re_c, tau, sine_term="standard"):
    """The closed form exactly as quoted, direct complex-gamma evaluation.

    Valid away from the 16 Om^2 = A^2 threshold; used to confirm that the
    numerically stable resolved form in the package is the same function.
    """
    g = np.sqrt(complex(16 * Om**2 - A**2)) / 4
    tau = np.asarray(tau, dtype=float)
    E = np.exp(-0.75 * A * tau)
    base = 1 - 0.5 * E * (np.cos(g * tau) + (3 * A / (4 * g)) * np.sin(g * tau))
    ac = A * (A**2 + 2 * Om**2) * (A**2 - 22 * Om**2) / (16 * g**2)
    bs = g2_sine_numerator(A, Om, sine_term) / (64 * A * g**3)
    cs = (A**2 - 6 * Om**2) * (A**2 + 2 * Om**2) / (4 * g)
    corr = -0.5 * (A * re_c / (A**2 + 2 * Om**2) ** 2) * E * (
        (4 * Om**2 + ac * tau) * np.cos(g * tau) - (bs + cs * tau) * np.sin(g * tau))
    return (base + corr).real


class TestG1:
    def test_zero_delay_antibunching(self):
        for om in (0.1, 0.25, 1.0, 5.0):
            assert g1_correlation(TwoLevelParams(1.0, om), 0.0) == 0.0

    def test_long_time_asymptote(self):
        assert abs(g1_correlation(TwoLevelParams(1.0, 1.0), 200.0) - 1.0) < 1e-12

    def test_against_rk4_regression_oracle(self):
        val = g1_correlation(TwoLevelParams(1.0, 1.0), 2.0)
        oracle = rk4_two_level_g(1.0, 1.0, [2.0])[0]
        assert abs(val - oracle) <= 1e-6

    def test_threshold_continuity(self):
        # 16 Om^2 = A^2 at Om = 0.25: values just above/below agree
        tau = np.linspace(0, 30, 301)
        above = g1_correlation(TwoLevelParams(1.0, 0.25 * (1 + 1e-6)), tau)
        below = g1_correlation(TwoLevelParams(1.0, 0.25 * (1 - 1e-6)), tau)
        assert np.max(np.abs(above - below)) < 1e-5

    def test_exact_threshold_limit(self):
        tau = np.array([0.5, 2.0, 7.0])
        got = g1_correlation(TwoLevelParams(1.0, 0.25), tau)
        expected = 1 - np.exp(-0.75 * tau) * (1 + 0.75 * tau)
        assert_allclose(got, expected, atol=1e-13)

    def test_bounded_oscillation(self, rng):
        for _ in range(100):
            params = TwoLevelParams(1.0, float(rng.uniform(0.01, 10)))
            tau = rng.uniform(0, 50, size=50)
            vals = g1_correlation(params, tau)
            assert np.all(vals >= 0) and np.all(vals <= 2)

    def test_huge_tau_no_overflow(self):
        # deep below threshold: cosh would overflow without the guard
        val = g1_correlation(TwoLevelParams(1.0, 0.01), 5000.0)
        assert val == pytest.approx(1.0)

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            g1_correlation(TwoLevelParams(1.0, 1.0), -1.0)


class TestIntensitySingle:
    def test_no_driving(self):
        assert intensity_single(TwoLevelParams(1.0, 0.0)) == 0.0

    def test_saturation(self):
        assert intensity_single(TwoLevelParams(1.0, 1e6)) == pytest.approx(0.5, rel=1e-10)

    def test_reference_value(self):
        assert intensity_single(TwoLevelParams(1.0, 0.3)) == pytest.approx(0.09 / 1.18, rel=1e-15)


class TestG2Pair:
    def test_uncoupled_zero_delay(self):
        val = g2_pair_correlation(TwoLevelParams(1.0, 0.7),
                                  DipoleCoupling.from_constant(0.0), 0.0)
        assert val == pytest.approx(0.5, abs=1e-15)

    def test_uncoupled_equals_half_one_plus_g1(self, rng):
        params = TwoLevelParams(1.0, 0.6)
        tau = rng.uniform(0, 30, size=200)
        g2 = g2_pair_correlation(params, DipoleCoupling.from_constant(0.0), tau)
        g1 = g1_correlation(params, tau)
        assert np.max(np.abs(g2 - (1 + g1) / 2)) < 1e-14

    @pytest.mark.parametrize("sine_term", ["standard", "corrected"])
    @pytest.mark.parametrize("omega", [0.3, 0.7, 1.5])
    def test_resolved_form_equals_literal(self, omega, sine_term):
        params = TwoLevelParams(1.0, omega)
        coupling = DipoleCoupling.from_constant(-0.09)
        tau = np.linspace(0.05, 15, 120)
        ours = g2_pair_correlation(params, coupling, tau, sine_term=sine_term)
        literal = g2_literal(1.0, omega, -0.09, tau, sine_term=sine_term)
        assert np.max(np.abs(ours - literal)) < 1e-10

    def test_threshold_stability(self):
        # the literal form has 1/gamma^3 blowup here; the resolved one must not
        tau = np.linspace(0, 20, 200)
        coupling = DipoleCoupling.from_constant(-0.09)
        near = g2_pair_correlation(TwoLevelParams(1.0, 0.25 * (1 + 1e-9)),
                                   coupling, tau)
        at = g2_pair_correlation(TwoLevelParams(1.0, 0.25), coupling, tau)
        assert np.all(np.isfinite(at))
        assert np.max(np.abs(near - at)) < 1e-6

    def test_zero_delay_first_order_consistency(self):
        # difference to the all-orders g2(0) shrinks quadratically in C
        params = TwoLevelParams(1.0, 0.5)
        diffs = []
        for rc in (0.2, 0.1, 0.05):
            coupling = DipoleCoupling.from_constant(rc)
            d = abs(g2_pair_correlation(params, coupling, 0.0)
                    - g2_zero(params, coupling))
            diffs.append(d)
        assert 3.0 < diffs[0] / diffs[1] < 5.0
        assert 3.0 < diffs[1] / diffs[2] < 5.0

    def test_sine_variants_agree_at_threshold(self):
        # the numerator difference carries the factor (16 Om^2 - A^2)
        assert g2_sine_numerator(1.0, 0.25, "standard") == pytest.approx(
            g2_sine_numerator(1.0, 0.25, "corrected"), rel=1e-12)


class TestG2Zero:
    def test_uncoupled(self):
        val = g2_zero(TwoLevelParams(1.0, 0.5), DipoleCoupling.from_constant(0.0))
        assert val == pytest.approx(0.5, abs=1e-15)

    def test_strong_driving_limit(self):
        rc = 0.3
        val = g2_zero(TwoLevelParams(1.0, 1e5), DipoleCoupling.from_constant(rc))
        assert val == pytest.approx((1 + rc**2) / 2, rel=1e-8)

    def test_singular_denominator(self):
        # 2 Om^2 + A (A + Re C) = 0 at Re C = -(A^2 + 2 Om^2)/A
        with pytest.raises(SingularityError):
            g2_zero(TwoLevelParams(1.0, 0.5), DipoleCoupling.from_constant(-1.5))


class TestIntensityPair:
    def test_uncoupled_doubles_single(self):
        params = TwoLevelParams(1.0, 0.3)
        val = intensity_pair(params, DipoleCoupling.from_constant(0.0))
        assert val == pytest.approx(2 * intensity_single(params), rel=1e-15)

    def test_no_driving(self):
        assert intensity_pair(TwoLevelParams(1.0, 0.0),
                              DipoleCoupling.from_constant(0.1)) == 0.0


class TestDipoleCoupling:
    def test_far_field_decay(self):
        c = dipole_coupling(1e4, np.pi / 2, A=1.0)
        assert abs(c.C) < 1e-3

    def test_reference_distances(self):
        c27 = dipole_coupling(2 * np.pi * 2.7, np.pi / 2, A=1.0)
        assert c27.C.real == pytest.approx(-0.09, rel=0.10)
        c12 = dipole_coupling(2 * np.pi * 1.2, np.pi / 2, A=1.0)
        assert c12.C.real == pytest.approx(0.2, rel=0.15)

    def test_perpendicular_geometry_factors(self):
        # at theta = pi/2 both angular factors equal 1
        kr = 5.0
        c = dipole_coupling(kr, np.pi / 2, A=1.0).C
        expected = 1.5 * np.exp(1j * kr) * (1 / (1j * kr) + 1 / kr**2 - 1 / (1j * kr**3))
        assert c == pytest.approx(expected, rel=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError, match="positive"):
            dipole_coupling(0.0, np.pi / 2)
        with pytest.raises(ValueError, match="positive"):
            DipoleCoupling(C=0.1, kr=-1.0)
        with pytest.raises(ValueError, match="theta"):
            dipole_coupling(1.0, 4.0)
