import unittest

import numpy as np

from flist.grid import (
    SampledPotential, SpectralContour, DecayError, GridSpecError, make_grid,
    sobolev_report, derivative, shifted, antiderivative, resample, check_decay,
    fit_uniform,
)


def sech(x):
    return 1 / np.cosh(x)


class TestMakeGrid(unittest.TestCase):
    def test_spacing(self):
        self.assertEqual(make_grid(-10, 10, 5).dx, 5)

    def test_two_nodes(self):
        np.testing.assert_array_equal(make_grid(0, 1, 2).nodes, [0, 1])

    def test_inverted_bounds(self):
        with self.assertRaises(GridSpecError):
            make_grid(10, -10, 5)

    def test_too_few_points(self):
        with self.assertRaises(GridSpecError):
            make_grid(0, 1, 1)

    def test_index_nearest(self):
        grid = make_grid(-10, 10, 21)
        self.assertEqual(grid.index_nearest(0.2), 10)
        self.assertEqual(grid.index_nearest(-50), 0)


class TestSampledPotential(unittest.TestCase):
    def test_shape_mismatch(self):
        with self.assertRaises(GridSpecError):
            SampledPotential(make_grid(0, 1, 4), np.zeros(3))

    def test_values_are_read_only(self):
        u = SampledPotential.zeros(make_grid(0, 1, 4))
        with self.assertRaises(ValueError):
            u.values[0] = 1


class TestSpectralContour(unittest.TestCase):
    def test_rejects_zero(self):
        with self.assertRaises(GridSpecError):
            SpectralContour([-1.0, 0.0, 1.0], [-1.0, 1.0])

    def test_rejects_asymmetric(self):
        with self.assertRaises(GridSpecError):
            SpectralContour([-1.0, 2.0], [-1.0, 1.0])

    def test_nodes_layout(self):
        contour = SpectralContour([1.0, -1.0], [-2.0, 2.0])
        np.testing.assert_array_equal(contour.nodes, [-1, 1, -2j, 2j])
        np.testing.assert_array_equal(contour.on_real_axis, [True, True, False, False])


class TestSobolevReport(unittest.TestCase):
    def setUp(self):
        self.grid = make_grid(-30, 30, 4096)

    def test_zero_field(self):
        report = sobolev_report(SampledPotential.zeros(self.grid))
        self.assertEqual(report.l2_norm, 0)
        self.assertEqual(report.h1_norm, 0)
        self.assertEqual(report.weighted_h33_estimate, 0)

    def test_sech_l2(self):
        u = SampledPotential.from_function(self.grid, sech)
        self.assertAlmostEqual(sobolev_report(u).l2_norm, np.sqrt(2), delta=1e-6)

    def test_non_decaying_tail(self):
        u = SampledPotential.from_function(self.grid, lambda x: np.exp(1j * x))
        with self.assertRaises(DecayError):
            sobolev_report(u)

    def test_sign_and_conjugation_invariance(self):
        u = SampledPotential.from_function(self.grid, lambda x: sech(x) * np.exp(0.5j * x))
        reference = sobolev_report(u)
        for other in (SampledPotential(self.grid, -u.values),
                      SampledPotential(self.grid, np.conj(u.values))):
            report = sobolev_report(other)
            self.assertAlmostEqual(report.l2_norm, reference.l2_norm, places=12)
            self.assertAlmostEqual(report.h1_norm, reference.h1_norm, places=12)
            self.assertAlmostEqual(
                report.weighted_h33_estimate, reference.weighted_h33_estimate, places=9
            )

    def test_refinement(self):
        coarse = SampledPotential.from_function(make_grid(-30, 30, 2049), sech)
        fine = SampledPotential.from_function(make_grid(-30, 30, 4097), sech)
        l2_coarse, l2_fine = sobolev_report(coarse).l2_norm, sobolev_report(fine).l2_norm
        self.assertLess(abs(l2_coarse - l2_fine) / l2_fine, 1e-6)

    def test_check_decay_threshold(self):
        values = np.zeros(self.grid.n_points)
        values[-1] = 1e-9
        check_decay(SampledPotential(self.grid, values))
        with self.assertRaises(DecayError):
            check_decay(SampledPotential(self.grid, values), decay_tol=1e-10)


class TestSpectralHelpers(unittest.TestCase):
    def setUp(self):
        self.grid = make_grid(-30, 30, 4096)
        self.u = SampledPotential.from_function(self.grid, sech)

    def test_zero_derivative(self):
        zero = SampledPotential.zeros(self.grid)
        np.testing.assert_array_equal(derivative(zero).values, 0)

    def test_fourier_eigenfunction(self):
        n = 64
        grid = make_grid(0, 2 * np.pi * (n - 1) / n, n)
        u = SampledPotential.from_function(grid, lambda x: np.exp(1j * x))
        np.testing.assert_allclose(derivative(u).values, 1j * u.values, atol=1e-10)

    def test_sech_derivative(self):
        x = self.grid.nodes
        expected = -sech(x) * np.tanh(x)
        np.testing.assert_allclose(derivative(self.u).values, expected, atol=1e-8)

    def test_finite_difference_fallback(self):
        x = self.grid.nodes
        expected = -sech(x) * np.tanh(x)
        approx = derivative(self.u, method="finite_difference").values
        np.testing.assert_allclose(approx, expected, atol=1e-4)

    def test_linearity(self):
        v = SampledPotential.from_function(self.grid, lambda x: np.exp(-x**2) * (1 + 1j * x))
        combined = SampledPotential(self.grid, 2 * self.u.values - 3j * v.values)
        np.testing.assert_allclose(
            derivative(combined).values,
            2 * derivative(self.u).values - 3j * derivative(v).values,
            atol=1e-12,
        )

    def test_half_cell_shift(self):
        half = self.grid.dx / 2
        np.testing.assert_allclose(
            shifted(self.u.values, self.grid, half), sech(self.grid.nodes + half)[:], atol=1e-9
        )

    def test_antiderivative(self):
        x = self.grid.nodes
        expected = np.tanh(x) - np.tanh(x[0])
        np.testing.assert_allclose(antiderivative(self.u.values, self.grid), expected, atol=1e-9)

    def test_antiderivative_shift(self):
        x = self.grid.nodes
        half = self.grid.dx / 2
        expected = np.tanh(x + half) - np.tanh(x[0])
        np.testing.assert_allclose(
            antiderivative(self.u.values, self.grid, shift=half)[:-1], expected[:-1], atol=1e-9
        )

    def test_resample_refines(self):
        coarse = SampledPotential.from_function(make_grid(-30, 30, 1024), sech)
        target = make_grid(-20, 20, 301)
        np.testing.assert_allclose(
            resample(coarse, target).values, sech(target.nodes), atol=1e-8
        )

    def test_fit_uniform_recovers_band_limited_field(self):
        grid = make_grid(-5, 5, 64)
        kappa = grid.wavenumbers[3]
        x = grid.nodes + 0.25 * grid.dx * np.sin(5 * np.pi * np.arange(64) / 63)
        fitted = fit_uniform(x, np.exp(1j * kappa * (x - grid.x_min)), grid)
        np.testing.assert_allclose(fitted.values, np.exp(1j * kappa * (grid.nodes - grid.x_min)),
                                   atol=1e-10)


if __name__ == "__main__":
    unittest.main()
