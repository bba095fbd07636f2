from unittest import TestCase

import numpy as np
from parameterized import parameterized as p

from toda_spectra.abelian_differentials import (
    _basis_values,
    band_integral_direct,
    band_integral_first_kind,
    frequencies_via_B5,
    frequency_mean_value,
    frequency_mean_value_bounds,
    gap_cycle_integral,
    gap_root_factor,
    normalization_residual,
    period_matrix,
    phi_quotient,
    phi_values,
    phi_zeros,
    psi_basis,
)
from toda_spectra.core import exceptions
from toda_spectra.core.quadrature import chebyshev_nodes
from toda_spectra.jacobi_spectral import chi_log_abs, eigenvalues_Q
from toda_spectra.toda_actions import actions_arcosh
from toda_spectra.toda_model import equilibrium_state, make_state


def random_state(N, seed=5):
    rng = np.random.RandomState(seed)
    return make_state(0.3 * rng.randn(N), 0.7 + 0.6 * rng.rand(N))


class BasisCase(TestCase):
    N = 6

    def setUp(self):
        self.state = random_state(self.N)
        self.spectrum = eigenvalues_Q(self.state)
        self.pm = period_matrix(self.state, self.spectrum)
        self.basis = psi_basis(self.pm)


class TestPsiBasis(BasisCase):
    def test_normalization(self):
        identity = self.pm.A @ self.basis.coeffs.T
        np.testing.assert_allclose(identity, np.eye(self.N - 1), atol=1e-10)
        self.assertTrue(np.all(normalization_residual(self.basis) < 1e-8))

    def test_frequencies_are_positive(self):
        self.assertEqual(len(self.basis.freq), self.N - 1)
        self.assertTrue(np.all(self.basis.freq > 0))

    def test_frequency_is_the_harmonic_mean_over_its_gap(self):
        t = chebyshev_nodes(256)
        for n in range(1, self.N):
            sigma = phi_zeros(self.basis, self.spectrum, n)
            mu = self.spectrum.tau[n - 1] + 0.5 * self.spectrum.gap_len[n - 1] * t
            values = np.array([frequency_mean_value(self.spectrum, sigma, n, m) for m in mu])
            self.assertAlmostEqual(self.basis.freq[n - 1] * np.mean(1.0 / values), 1.0, places=8)
            low, high = frequency_mean_value_bounds(self.spectrum, sigma, n)
            self.assertTrue(low <= self.basis.freq[n - 1] <= high)

    def test_singular_matrix_is_rejected(self):
        broken = self.pm._replace(A=np.zeros_like(self.pm.A), cond=np.inf)
        with self.assertRaises(exceptions.SingularPeriodMatrix):
            psi_basis(broken)


class TestPhiZeros(BasisCase):
    @p.expand([(1,), (3,), (5,)])
    def test_one_zero_in_each_foreign_gap(self, n):
        sigma = phi_zeros(self.basis, self.spectrum, n)
        foreign = np.array([k for k in range(1, self.N) if k != n])
        lam = self.spectrum.lam
        self.assertTrue(np.all(lam[2 * foreign - 1] <= sigma))
        self.assertTrue(np.all(sigma <= lam[2 * foreign]))
        scale = np.max(np.abs(phi_values(self.basis, n, lam)))
        np.testing.assert_allclose(phi_values(self.basis, n, sigma) / scale, 0.0, atol=1e-10)

    def test_zeros_are_memoized_on_the_basis(self):
        first = phi_zeros(self.basis, self.spectrum, 2)
        self.assertIs(phi_zeros(self.basis, self.spectrum, 2), first)

    def test_phi_does_not_vanish_on_its_own_gap(self):
        n = 2
        t = chebyshev_nodes(32)
        mu = self.spectrum.tau[n - 1] + 0.5 * self.spectrum.gap_len[n - 1] * t
        values = phi_values(self.basis, n, mu)
        self.assertTrue(np.all(values > 0) or np.all(values < 0))

    def test_quotient_matches_the_direct_ratio(self):
        n = 3
        sigma = phi_zeros(self.basis, self.spectrum, n)
        lam = self.spectrum.lam
        mu = np.array([0.5 * (lam[0] + lam[1]), 0.3 * lam[4] + 0.7 * lam[5], lam[-1] + 0.1])
        direct = np.abs(phi_values(self.basis, n, mu)) / np.exp(0.5 * chi_log_abs(self.spectrum, mu))
        np.testing.assert_allclose(phi_quotient(self.spectrum, sigma, n, mu), direct, rtol=1e-10)


class TestBandIntegrals(BasisCase):
    @p.expand([(1,), (3,), (6,)])
    def test_integration_by_parts_matches_direct_quadrature(self, j):
        by_parts = band_integral_first_kind(self.state, self.spectrum, j)
        direct = band_integral_direct(self.state, self.spectrum, j)
        self.assertAlmostEqual(by_parts, direct, delta=1e-7 * max(1.0, abs(by_parts)))

    def test_without_moment_weight(self):
        self.assertEqual(band_integral_first_kind(self.state, self.spectrum, 2, moment=False), -np.pi)

    @p.expand([(0,), (7,)])
    def test_band_index_range(self, j):
        with self.assertRaises(ValueError):
            band_integral_first_kind(self.state, self.spectrum, j)

    def test_band_integral_frequencies_match_the_leading_coefficients(self):
        actions = actions_arcosh(self.state, self.spectrum)
        omega = frequencies_via_B5(self.state, self.spectrum, self.basis, actions)
        np.testing.assert_allclose(omega, self.basis.freq, rtol=1e-6)


class TestGapCycleIntegral(BasisCase):
    @p.expand([(1, "chi"), (3, "delta"), (5, "chi")])
    def test_root_factor_leaves_the_chebyshev_weight(self, k, root):
        def f(mu):
            factor = gap_root_factor(self.state, self.spectrum, k, mu, root)
            return np.stack((factor, mu * factor))

        unit, center = gap_cycle_integral(self.state, self.spectrum, k, f, root)
        self.assertAlmostEqual(unit, 1.0, places=9)
        self.assertAlmostEqual(center, self.spectrum.tau[k - 1], places=9)

    def test_closed_gap(self):
        state = equilibrium_state(6)
        with self.assertRaises(exceptions.ClosedGap) as cm:
            gap_cycle_integral(state, eigenvalues_Q(state), 2, np.ones_like)
        self.assertEqual(cm.exception.n, 2)


class TestEquilibrium(TestCase):
    @p.expand([(4,), (6,)])
    def test_frequencies(self, N):
        state = equilibrium_state(N)
        spectrum = eigenvalues_Q(state)
        basis = psi_basis(period_matrix(state, spectrum))
        n = np.arange(1, N)
        np.testing.assert_allclose(basis.freq, 2.0 * np.sin(n * np.pi / N), rtol=1e-9)

        actions = actions_arcosh(state, spectrum)
        omega = frequencies_via_B5(state, spectrum, basis, actions)
        np.testing.assert_allclose(omega, 2.0 * np.sin(n * np.pi / N), rtol=1e-8)

    def test_closed_rows_fill_a_square_matrix(self):
        N = 8
        state = equilibrium_state(N)
        spectrum = eigenvalues_Q(state)
        self.assertTrue(np.all(spectrum.closed))
        pm = period_matrix(state, spectrum)
        self.assertEqual(pm.A.shape, (N - 1, N - 1))
        self.assertTrue(np.all(np.isfinite(pm.A)))
        self.assertTrue(np.isfinite(pm.cond))
        np.testing.assert_array_equal(pm.nodes, 0)

    def test_basis_values_shapes(self):
        self.assertEqual(_basis_values(0.3, 4).shape, (5,))
        self.assertEqual(_basis_values(np.zeros(7), 4).shape, (5, 7))
        np.testing.assert_allclose(_basis_values(1.0, 2), [1.0, 0.5, -0.5])

    def test_zeros_sit_at_the_closed_gaps(self):
        N = 6
        state = equilibrium_state(N)
        spectrum = eigenvalues_Q(state)
        basis = psi_basis(period_matrix(state, spectrum))
        sigma = phi_zeros(basis, spectrum, 2)
        ell = np.array([1, 3, 4, 5])
        np.testing.assert_allclose(sigma, -2.0 * np.cos(ell * np.pi / N), atol=1e-10)
