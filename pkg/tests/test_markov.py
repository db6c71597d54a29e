"""Period-switching Markov machinery."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from blinkcorr.blinking import VPairParams, vpair_rates
from blinkcorr.markov import (
    AbsorbingPeriodError,
    DegenerateEigenvaluesError,
    GeneratorMatrix,
    ReducibleChainError,
    TransitionRates,
    build_generator,
    generator_eigenvalues,
    mean_durations,
    occupancy_matrix,
    occupancy_stack,
    steady_probabilities,
    three_period_occupancy,
)

from conftest import random_irreducible_rates, taylor_expm


class TestGenerator:
    def test_zero_rates_give_zero_generator(self):
        g = build_generator(TransitionRates(np.zeros((3, 3))))
        assert_allclose(g.B, 0.0)

    def test_two_period_form(self):
        T0, T1 = 2.0, 5.0
        p = np.array([[0.0, 1 / T0], [1 / T1, 0.0]])
        g = build_generator(TransitionRates(p))
        assert_allclose(g.B, [[-1 / T0, 1 / T0], [1 / T1, -1 / T1]])

    def test_vpair_rates_row_sums(self):
        rates, _ = vpair_rates(VPairParams(omega2=0.005, omega3=0.3, c3=-0.09))
        B = build_generator(rates).B
        assert np.max(np.abs(B.sum(axis=1))) <= 1e-14 * np.max(np.abs(B))

    def test_validation(self):
        with pytest.raises(ValueError, match="nonnegative"):
            TransitionRates(np.array([[0.0, -1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError, match="diagonal"):
            TransitionRates(np.array([[0.5, 1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError, match="sum to zero"):
            GeneratorMatrix(np.array([[-1.0, 2.0], [1.0, -1.0]]))
        with pytest.raises(ValueError, match=">= 0"):
            GeneratorMatrix(np.array([[1.0, -1.0], [1.0, -1.0]]))


class TestOccupancy:
    def test_tau_zero_is_identity(self, rng):
        for n in (1, 2, 3, 4):
            p = random_irreducible_rates(rng, n) if n > 1 else np.zeros((1, 1))
            occ = occupancy_matrix(build_generator(TransitionRates(p)), 0.0)
            assert_allclose(occ.P, np.eye(n), atol=1e-14)

    def test_two_period_closed_form(self):
        T0, T1 = 2.0, 5.0
        p = np.array([[0.0, 1 / T0], [1 / T1, 0.0]])
        B = build_generator(TransitionRates(p))
        for tau in (0.3, 1.0, 4.0, 20.0):
            expected = T1 / (T0 + T1) + (T0 / (T0 + T1)) * np.exp(-(1 / T0 + 1 / T1) * tau)
            assert_allclose(occupancy_matrix(B, tau).P[1, 1], expected, rtol=1e-12)

    def test_matches_series_oracle(self, rng):
        p = random_irreducible_rates(rng, 3)
        B = build_generator(TransitionRates(p))
        P = occupancy_matrix(B, 0.7).P
        assert np.max(np.abs(P - taylor_expm(B.B, 0.7))) <= 1e-9

    def test_negative_tau_rejected(self):
        B = build_generator(TransitionRates(np.zeros((2, 2))))
        with pytest.raises(ValueError, match="nonnegative"):
            occupancy_matrix(B, -0.1)

    def test_degenerate_spectrum_falls_back(self):
        # two identical disconnected 2-state blocks: doubly degenerate spectrum
        p = np.zeros((4, 4))
        p[0, 1] = p[1, 0] = p[2, 3] = p[3, 2] = 1.0
        B = build_generator(TransitionRates(p))
        P = occupancy_matrix(B, 0.9).P
        assert np.max(np.abs(P - taylor_expm(B.B, 0.9))) <= 1e-9

    def test_stochasticity_property(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 5))
            B = build_generator(TransitionRates(random_irreducible_rates(rng, n)))
            tau = float(rng.uniform(0, 10))
            P = occupancy_matrix(B, tau).P
            assert np.all(P >= -1e-10) and np.all(P <= 1 + 1e-10)
            assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-10

    def test_semigroup_property(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 5))
            B = build_generator(TransitionRates(random_irreducible_rates(rng, n)))
            t1, t2 = rng.uniform(0, 5, size=2)
            P1 = occupancy_matrix(B, t1).P
            P2 = occupancy_matrix(B, t2).P
            P12 = occupancy_matrix(B, t1 + t2).P
            assert np.max(np.abs(P1 @ P2 - P12)) <= 1e-9

    def test_spectral_sanity(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 5))
            mus = generator_eigenvalues(
                build_generator(TransitionRates(random_irreducible_rates(rng, n))))
            near_zero = np.abs(mus) < 1e-10
            assert near_zero.sum() == 1
            assert np.all(mus[~near_zero].real < 0)

    def test_stack_matches_scalar(self, rng):
        B = build_generator(TransitionRates(random_irreducible_rates(rng, 3)))
        taus = np.array([0.0, 0.4, 2.2])
        stack = occupancy_stack(B, taus)
        for k, t in enumerate(taus):
            assert_allclose(stack[k], occupancy_matrix(B, t).P, atol=1e-12)


class TestSteady:
    def test_two_period(self):
        T0, T1 = 2.0, 5.0
        p = np.array([[0.0, 1 / T0], [1 / T1, 0.0]])
        P = steady_probabilities(build_generator(TransitionRates(p))).P
        assert_allclose(P, [T0 / (T0 + T1), T1 / (T0 + T1)], rtol=1e-12)

    def test_symmetric_two_period(self):
        p = np.array([[0.0, 0.7], [0.7, 0.0]])
        P = steady_probabilities(build_generator(TransitionRates(p))).P
        assert_allclose(P, [0.5, 0.5], rtol=1e-12)

    def test_three_period_closed_form(self, rng):
        p01, p10, p12, p21 = rng.uniform(0.2, 2.0, size=4)
        p = np.zeros((3, 3))
        p[0, 1], p[1, 0], p[1, 2], p[2, 1] = p01, p10, p12, p21
        P = steady_probabilities(build_generator(TransitionRates(p))).P
        D = p10 * p21 + p01 * p12 + p01 * p21
        assert_allclose(P, [p10 * p21 / D, p01 * p21 / D, p01 * p12 / D],
                        rtol=1e-10)

    def test_reducible_chain_rejected(self):
        p = np.zeros((4, 4))
        p[0, 1] = p[1, 0] = p[2, 3] = p[3, 2] = 1.0
        with pytest.raises(ReducibleChainError):
            steady_probabilities(build_generator(TransitionRates(p)))

    def test_matches_long_time_occupancy(self, rng):
        p = random_irreducible_rates(rng, 3)
        rates = TransitionRates(p)
        B = build_generator(rates)
        tau = 100.0 * mean_durations(rates).max()
        P_inf = occupancy_matrix(B, tau).P
        P = steady_probabilities(B).P
        assert np.max(np.abs(P_inf - P[None, :])) <= 1e-8


class TestThreePeriodClosedForm:
    def test_initial_condition(self):
        P = three_period_occupancy(0.8, 0.5, 0.7, 0.9, 0.0)
        assert_allclose(P, np.eye(2), atol=1e-14)

    def test_long_time_limit_is_steady(self):
        p01, p10, p12, p21 = 0.8, 0.5, 0.7, 0.9
        P = three_period_occupancy(p01, p10, p12, p21, 200.0)
        D = p10 * p21 + p01 * p12 + p01 * p21
        expected = np.array([p01 * p21, p01 * p12]) / D
        assert_allclose(P[0], expected, atol=1e-12)
        assert_allclose(P[1], expected, atol=1e-12)

    def test_matches_general_occupancy(self, rng):
        for _ in range(50):
            p01, p10, p12, p21 = rng.uniform(0.05, 3.0, size=4)
            p = np.zeros((3, 3))
            p[0, 1], p[1, 0], p[1, 2], p[2, 1] = p01, p10, p12, p21
            B = build_generator(TransitionRates(p))
            for tau in (0.5, 2.0, 10.0):
                closed = three_period_occupancy(p01, p10, p12, p21, tau)
                general = occupancy_matrix(B, tau).P[1:, 1:]
                assert np.max(np.abs(closed - general)) <= 1e-9

    def test_vectorized_tau(self):
        taus = np.array([0.1, 1.0, 5.0])
        stack = three_period_occupancy(0.8, 0.5, 0.7, 0.9, taus)
        assert stack.shape == (3, 2, 2)
        for k, t in enumerate(taus):
            assert_allclose(stack[k], three_period_occupancy(0.8, 0.5, 0.7, 0.9, t))

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError, match="p10"):
            three_period_occupancy(0.8, 0.0, 0.7, 0.9, 1.0)


class TestMeanDurations:
    def test_two_period(self):
        p = np.array([[0.0, 0.25], [2.0, 0.0]])
        assert_allclose(mean_durations(TransitionRates(p)), [4.0, 0.5])

    def test_vpair_t1(self):
        params = VPairParams(omega2=0.005, omega3=0.3, c3=-0.09)
        rates, T = vpair_rates(params)
        assert_allclose(T[1], 1.0 / (rates.p[1, 0] + rates.p[1, 2]), rtol=1e-14)

    def test_uniform_rates(self):
        c = 0.4
        p = np.full((3, 3), c)
        np.fill_diagonal(p, 0.0)
        assert_allclose(mean_durations(TransitionRates(p)), 1 / (2 * c))

    def test_absorbing_period(self):
        p = np.zeros((2, 2))
        p[0, 1] = 1.0
        with pytest.raises(AbsorbingPeriodError):
            mean_durations(TransitionRates(p))
