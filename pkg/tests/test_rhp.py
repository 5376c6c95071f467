import unittest

import numpy as np

from flist.grid import make_grid, spectral_derivative
from flist.rhp import (
    SingularSystem, WrongSolitonCount, adaptive_delta, eta_squared, nsoliton_field,
    one_soliton_envelope, reconstruct, solve_reflectionless, velocity,
)
from flist.spectrum import SolitonEnsemble

K1 = np.exp(1j * np.pi / 4)
SIGMA2 = np.array([[0, -1j], [1j, 0]])


def field_at(ens, x, t=0.0, delta=None, **kwargs):
    return reconstruct(solve_reflectionless(ens, delta, x, t, **kwargs), ens)


class TestPhaseFunctions(unittest.TestCase):
    def test_eta_squared(self):
        k = 0.7 + 0.4j
        self.assertAlmostEqual(eta_squared(k, 1.5, 2.0), 1.5 * (k - 1 / k) ** 2)

    def test_stationary_soliton(self):
        self.assertAlmostEqual(velocity(K1, 1.0, 2.0), 0, places=14)
        self.assertAlmostEqual(velocity(K1, 1.0, 1.0), -0.75)


class TestOneSoliton(unittest.TestCase):
    def setUp(self):
        self.ens = SolitonEnsemble([K1], [1.0])
        self.grid = make_grid(-6, 6, 241)

    def test_matches_envelope(self):
        field = nsoliton_field(self.ens, None, self.grid, 0.0)
        expected = one_soliton_envelope(self.ens, self.grid.nodes, 0.0)
        np.testing.assert_allclose(np.abs(field.derivative_values), expected, rtol=1e-8)
        np.testing.assert_allclose(np.abs(field.values), expected / 2, rtol=1e-8)

    def test_peak_height(self):
        ens = SolitonEnsemble([0.6 + 1.1j], [0.3])
        peak = one_soliton_envelope(ens, np.linspace(-3, 3, 60001), 0.0).max()
        self.assertAlmostEqual(peak, 4.4, places=6)

    def test_travels_with_velocity(self):
        t = 2.0
        field = nsoliton_field(self.ens, None, self.grid, t, alpha=1.0, beta=1.0)
        expected = one_soliton_envelope(self.ens, self.grid.nodes, t, alpha=1.0, beta=1.0)
        np.testing.assert_allclose(np.abs(field.derivative_values), expected, rtol=1e-8)
        peak = self.grid.nodes[np.argmax(expected)]
        self.assertAlmostEqual(peak, -1.5, delta=self.grid.dx)

    def test_phase_constant_only_rotates(self):
        rotated = self.ens.with_constants(np.array([1j]))
        for x in (-1.0, 0.2, 1.3):
            self.assertAlmostEqual(abs(field_at(self.ens, x).u_value),
                                   abs(field_at(rotated, x).u_value), places=12)

    def test_derivative_is_consistent(self):
        grid = make_grid(-12, 12, 961)
        field = nsoliton_field(self.ens, None, grid, 0.0)
        numeric = spectral_derivative(field.values, grid)
        np.testing.assert_allclose(field.derivative_values, numeric, atol=1e-7)

    def test_decays_far_away(self):
        for x in (40.0, -40.0, 1e4):
            self.assertLess(abs(field_at(self.ens, x).u_value), 1e-12)

    def test_d0(self):
        # a(0) = -1 for a single pair at e^{iπ/4}
        self.assertAlmostEqual(field_at(self.ens, 0.0).d0, 2 * np.pi, places=12)

    def test_wrong_count(self):
        with self.assertRaises(WrongSolitonCount):
            one_soliton_envelope(SolitonEnsemble([K1, 0.4 + 1.2j], [1, 1]), 0.0, 0.0)


class TestResidueSystem(unittest.TestCase):
    def setUp(self):
        self.ens = SolitonEnsemble([K1, 0.4 + 1.2j], [1.0, 0.5 - 0.5j])

    def test_independent_of_blaschke_split(self):
        reference = field_at(self.ens, 0.3, 0.1, delta=[])
        for delta in ([0, 2], [1], [0, 1, 2, 3], None):
            field = field_at(self.ens, 0.3, 0.1, delta=delta)
            self.assertAlmostEqual(abs(field.u_value - reference.u_value), 0, places=10)
            self.assertAlmostEqual(abs(field.u_x_value - reference.u_x_value), 0, places=9)

    def test_unit_determinant(self):
        solution = solve_reflectionless(self.ens, None, -0.4, 0.0)
        for k in (0.3 + 0.2j, 2.0, -1.1 - 0.7j, 5j):
            self.assertAlmostEqual(abs(np.linalg.det(solution.evaluate(k)) - 1), 0, places=10)

    def test_conjugation_symmetry(self):
        solution = solve_reflectionless(self.ens, None, 0.7, 0.0)
        for k in (0.3 + 0.2j, 1.5 - 0.4j):
            mirrored = SIGMA2 @ np.conj(solution.evaluate(np.conj(k))) @ SIGMA2
            np.testing.assert_allclose(solution.evaluate(k), mirrored, atol=1e-10)

    def test_normalised_at_infinity(self):
        solution = solve_reflectionless(self.ens, None, 0.0, 0.0)
        np.testing.assert_allclose(solution.evaluate(1e7 * (1 + 1j)), np.eye(2), atol=1e-6)

    def test_small_residual(self):
        self.assertLess(solve_reflectionless(self.ens, [], 0.5, 0.0).residual, 1e-10)

    def test_adaptive_split_follows_growth(self):
        self.assertEqual(adaptive_delta(SolitonEnsemble([K1], [1.0]), -5.0, 0.0), [0, 1])
        self.assertEqual(adaptive_delta(SolitonEnsemble([K1], [1.0]), 5.0, 0.0), [])

    def test_empty_ensemble(self):
        with self.assertRaises(SingularSystem):
            solve_reflectionless(SolitonEnsemble.empty(), None, 0.0, 0.0)
        field = nsoliton_field(SolitonEnsemble.empty(), None, make_grid(-1, 1, 11), 0.0)
        np.testing.assert_array_equal(field.values, 0)


if __name__ == "__main__":
    unittest.main()
