import math
from unittest import TestCase

import numpy as np
from parameterized import parameterized as p

from toda_spectra.core import exceptions
from toda_spectra.toda_model import (
    FourierProfile,
    discretize,
    discretize_pq,
    equilibrium_state,
    evolve_lax,
    lax_matrices,
    make_state,
    potentials,
    reflect,
    reflect_profiles,
)


ALPHA = FourierProfile(cos=[1.0, 0.25])
BETA = FourierProfile(sin=[1.0], cos=[0.0, -0.5])


def random_state(N, seed=7):
    rng = np.random.RandomState(seed)
    return make_state(0.3 * rng.randn(N), 1.0 + 0.3 * rng.rand(N))


class TestFourierProfile(TestCase):
    def test_evaluation(self):
        f = FourierProfile(cos=[1.0], sin=[0.0, 2.0])
        self.assertAlmostEqual(float(f(0.125)), math.cos(math.pi / 4) + 2.0, places=14)

    def test_from_triples_adds_repeated_modes(self):
        f = FourierProfile.from_triples([[2, 1.0, 0.0], [1, 0.0, 3.0], [2, 0.5, 0.0]])
        self.assertEqual(f.cos, (0.0, 1.5))
        self.assertEqual(f.sin, (3.0, 0.0))

    @p.expand([
        ([[0, 1.0, 0.0]],),
        ([[1.5, 1.0, 0.0]],),
        ([[1, 1.0]],),
    ])
    def test_from_triples_rejects(self, triples):
        with self.assertRaises(ValueError):
            FourierProfile.from_triples(triples)

    def test_rejects_bad_period(self):
        with self.assertRaises(ValueError):
            FourierProfile(cos=[1.0], period=0.0)

    def test_antiderivative_inverts_derivative(self):
        f = ALPHA.plus(BETA)
        back = f.antiderivative().derivative()
        np.testing.assert_allclose(back.cos, f.cos, atol=1e-14)
        np.testing.assert_allclose(back.sin, f.sin, atol=1e-14)

    def test_antiderivative_has_the_right_slope(self):
        x = np.linspace(0.0, 1.0, 7)
        xi = ALPHA.antiderivative()
        h = 1e-6
        slope = (xi(x + h) - xi(x - h)) / (2 * h)
        np.testing.assert_allclose(slope, ALPHA(x), atol=1e-8)

    def test_mirrored_and_double_frequency(self):
        x = np.linspace(0.0, 1.0, 9)
        np.testing.assert_allclose(BETA.mirrored()(x), BETA(-x), atol=1e-14)
        doubled = BETA.at_double_frequency()
        self.assertEqual(doubled.period, 0.5)
        np.testing.assert_allclose(doubled(x), BETA(2 * x), atol=1e-13)

    def test_zero(self):
        self.assertTrue(FourierProfile.zero().is_zero())
        self.assertFalse(ALPHA.is_zero())


class TestStates(TestCase):
    def test_make_state_invariants(self):
        state = make_state([0.5, -0.25, 0.0], [1.0, 2.0, 0.5])
        self.assertEqual(state.N, 3)
        self.assertAlmostEqual(state.trace_p, 0.25)
        self.assertAlmostEqual(state.prod_q, 1.0)
        with self.assertRaises(ValueError):
            state.b[0] = 1.0

    def test_non_positive_a_names_the_index(self):
        with self.assertRaises(exceptions.NonPositiveA) as cm:
            make_state([0.0, 0.0, 0.0], [1.0, 0.0, 1.0])
        self.assertEqual(cm.exception.n, 2)

    @p.expand([
        ([0.0, 0.0], [1.0, 1.0]),
        ([0.0, 0.0, 0.0], [1.0, 1.0]),
    ])
    def test_shape_errors(self, b, a):
        with self.assertRaises(ValueError):
            make_state(b, a)

    def test_equilibrium(self):
        state = equilibrium_state(5, s=2.0, r=0.5)
        self.assertEqual(state.trace_p, 2.5)
        self.assertEqual(state.prod_q, 32.0)

    def test_discretize_samples_the_profiles(self):
        N = 16
        state = discretize(ALPHA, BETA, N)
        x = np.arange(1, N + 1) / N
        np.testing.assert_allclose(state.b, BETA(x) / (4 * N * N), atol=1e-15)
        np.testing.assert_allclose(state.a, 1.0 + ALPHA(x) / (4 * N * N), atol=1e-15)

    def test_discretize_pq_without_alpha_is_flat(self):
        state = discretize_pq(FourierProfile.zero(), BETA, 12)
        np.testing.assert_allclose(state.a, 1.0, atol=1e-15)

    def test_discretize_pq_close_to_discretize(self):
        N = 64
        direct, via_q = discretize(ALPHA, BETA, N), discretize_pq(ALPHA, BETA, N)
        self.assertLess(np.max(np.abs(direct.a - via_q.a)), 1.0 / N ** 2)

    def test_discretize_pq_gap_shrinks_at_third_order(self):
        gaps = []
        for N in (64, 128):
            direct, via_q = discretize(ALPHA, BETA, N), discretize_pq(ALPHA, BETA, N)
            gaps.append(np.max(np.abs(direct.a - via_q.a)))
        self.assertAlmostEqual(gaps[0] / gaps[1], 8.0, delta=1.5)

    def test_discretize_needs_three_particles(self):
        with self.assertRaises(ValueError):
            discretize(ALPHA, BETA, 2)


class TestReflection(TestCase):
    @p.expand([(5,), (6,)])
    def test_reflect_is_an_involution(self, N):
        state = random_state(N)
        twice = reflect(reflect(state))
        np.testing.assert_array_equal(twice.b, state.b)
        np.testing.assert_array_equal(twice.a, state.a)

    def test_reflect_negates_the_spectrum_of_L(self):
        state = random_state(6)
        original = np.linalg.eigvalsh(lax_matrices(state).L)
        mirrored = np.linalg.eigvalsh(lax_matrices(reflect(state)).L)
        np.testing.assert_allclose(mirrored, -original[::-1], atol=1e-13)

    def test_reflect_profiles(self):
        x = np.linspace(0.0, 1.0, 5)
        alpha, beta = reflect_profiles(ALPHA, BETA)
        np.testing.assert_allclose(alpha(x), ALPHA(-x), atol=1e-14)
        np.testing.assert_allclose(beta(x), -BETA(-x), atol=1e-14)

    def test_potentials(self):
        x = np.linspace(0.0, 0.5, 11)
        q_minus, q_plus = potentials(ALPHA, BETA)
        self.assertEqual(q_minus.period, 0.5)
        np.testing.assert_allclose(q_minus(x), -2 * ALPHA(2 * x) + BETA(2 * x), atol=1e-13)
        np.testing.assert_allclose(q_plus(x), -2 * ALPHA(2 * x) - BETA(2 * x), atol=1e-13)


class TestLaxFlow(TestCase):
    def test_lax_pair_shapes(self):
        pair = lax_matrices(random_state(5))
        np.testing.assert_array_equal(pair.L, pair.L.T)
        np.testing.assert_array_equal(pair.B, -pair.B.T)

    def test_flow_is_isospectral(self):
        state = random_state(6)
        samples = evolve_lax(state, 0.5, 1e-3, sample_every=100)
        self.assertEqual(samples[0].t, 0.0)
        self.assertAlmostEqual(samples[-1].t, 0.5)
        self.assertEqual(len(samples), 6)
        initial = np.linalg.eigvalsh(lax_matrices(state).L)
        for sample in samples[1:]:
            drift = np.linalg.eigvalsh(lax_matrices(sample.state).L) - initial
            self.assertLess(np.max(np.abs(drift)), 1e-9)
            self.assertAlmostEqual(sample.state.trace_p, state.trace_p, places=10)
            self.assertAlmostEqual(sample.state.prod_q, state.prod_q, places=8)

    def test_unit_time_drift_at_small_steps(self):
        state = random_state(8)
        final = evolve_lax(state, 1.0, 1e-3)[-1].state
        initial = np.linalg.eigvalsh(lax_matrices(state).L)
        drift = np.linalg.eigvalsh(lax_matrices(final).L) - initial
        self.assertLess(np.max(np.abs(drift)), 1e-8)

    def test_halving_the_step_cuts_the_drift_sixteenfold(self):
        state = random_state(8)
        initial = np.linalg.eigvalsh(lax_matrices(state).L)
        drifts = []
        for dt in (0.1, 0.05):
            final = evolve_lax(state, 2.0, dt)[-1].state
            drifts.append(np.max(np.abs(np.linalg.eigvalsh(lax_matrices(final).L) - initial)))
        self.assertGreater(drifts[1], 1e-12)
        self.assertAlmostEqual(drifts[0] / drifts[1], 16.0, delta=6.0)

    def test_zero_time_returns_the_initial_state(self):
        state = random_state(4)
        samples = evolve_lax(state, 0.0, 0.1)
        self.assertEqual(len(samples), 1)
        self.assertIs(samples[0].state, state)

    @p.expand([(1.0, 0.0), (-1.0, 0.1)])
    def test_rejects_bad_steps(self, t_final, dt):
        with self.assertRaises(ValueError):
            evolve_lax(random_state(4), t_final, dt)
