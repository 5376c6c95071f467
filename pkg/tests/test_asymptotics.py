import unittest

import numpy as np
from scipy.special import rgamma

from flist.asymptotics import (
    DegenerateCone, GammaOverflow, InsufficientSamples, OriginSingularity, OutsideCone,
    PhaseGeometry, cone_select, correction_bound, f_of_v, fit_decay_rate, leading_asymptotic,
    pc_coefficients, phase, phase_derivative, stationary_nu, stationary_points,
)
from flist.grid import SampledPotential, make_grid
from flist.rhp import reconstruct, solve_reflectionless, velocity
from flist.scattering import default_contour, scattering_coefficients
from flist.spectrum import SolitonEnsemble, trace_formula_a

K1 = np.exp(1j * np.pi / 4)


def radiation_data():
    grid = make_grid(-12, 12, 1201)
    u = SampledPotential.from_function(
        grid, lambda x: 0.2 * (1 + 0.5j * x) * np.exp(-x**2 / 2)
    )
    return scattering_coefficients(u, default_contour(0.05, 5.0, 40))


class TestPhaseGeometry(unittest.TestCase):
    def setUp(self):
        self.geo = stationary_points(1.0, 2.0, 1.0)

    def test_unit_stationary_points(self):
        self.assertAlmostEqual(self.geo.k0, 1.0)
        np.testing.assert_allclose(self.geo.stationary_points, [1, 1j, -1, -1j], atol=1e-15)

    def test_phase_values(self):
        self.assertAlmostEqual(abs(phase(1.0, self.geo)), 0, places=14)
        k = 0.7 + 0.3j
        self.assertAlmostEqual(abs(phase(k, self.geo) - phase(-k, self.geo)), 0, places=14)
        with self.assertRaises(OriginSingularity):
            phase(0.0, self.geo)

    def test_derivative_vanishes_at_stationary_points(self):
        geo = stationary_points(1.3, 0.7, 0.45)
        self.assertLess(np.max(np.abs(phase_derivative(geo.stationary_points, geo))), 1e-12)

    def test_second_derivative(self):
        h = 1e-4
        k0 = self.geo.k0
        numeric = (phase(k0 + h, self.geo) - 2 * phase(k0, self.geo)
                   + phase(k0 - h, self.geo)) / h**2
        self.assertAlmostEqual(abs(numeric - self.geo.theta_second[0]), 0, places=6)
        self.assertGreater(self.geo.theta_second[0].real, 0)

    def test_growth_on_inner_circle(self):
        k0 = self.geo.k0
        for angle in (0.3, 1.2, 2.0, 4.0):
            k = k0 / np.sqrt(2) * np.exp(1j * angle)
            growth = (2j * phase(k, self.geo)).real
            estimate = -0.5 * 2.0**2 * (k * k).imag * (1 / k0**4 - 1 / abs(k) ** 4)
            self.assertAlmostEqual(growth, estimate, places=12)

    def test_degenerate(self):
        with self.assertRaises(DegenerateCone):
            stationary_points(1.0, 2.0, 0.0)
        with self.assertRaises(DegenerateCone):
            stationary_points(1.0, 2.0, 1e13)


class TestVelocityInverse(unittest.TestCase):
    def test_f_inverts_velocity(self):
        for k in (K1, 0.3 + 1.4j, 1.7 + 0.2j):
            self.assertAlmostEqual(float(f_of_v(velocity(k, 1.5, 0.8), 1.5, 0.8)), abs(k),
                                   places=12)

    def test_decreasing(self):
        values = f_of_v(np.linspace(-0.9, 2.0, 50), 1.0, 2.0)
        self.assertTrue(np.all(np.diff(values) < 0))

    def test_rejects_fast_velocity(self):
        with self.assertRaises(DegenerateCone):
            f_of_v(-1.0, 1.0, 2.0)


class TestConeSelect(unittest.TestCase):
    def setUp(self):
        # β = 1: f(v) = (4(v + 1))^{-1/4}
        self.cone = (-1.0, 1.0, 1 / (4 * 1.2**4) - 1, -0.75)

    def test_partition(self):
        ens = SolitonEnsemble([0.9 * K1, 1.3 * K1], [1.0, 1.0])
        selection = cone_select(ens, None, self.cone, 1.0, 1.0)
        self.assertAlmostEqual(selection.inner_radius, 1.0)
        self.assertAlmostEqual(selection.outer_radius, 1.2)
        np.testing.assert_array_equal(selection.k_minus, [0])
        np.testing.assert_array_equal(selection.k_plus, [1])
        self.assertEqual(selection.n_in, 0)

    def test_unmodified_without_outside_poles(self):
        ens = SolitonEnsemble([1.1 * K1], [0.7 - 0.2j])
        selection = cone_select(ens, None, self.cone, 1.0, 1.0)
        np.testing.assert_array_equal(selection.c_modified, ens.c)

    def test_blaschke_modification(self):
        ens = SolitonEnsemble([0.9 * K1, 1.1 * K1], [1.0, 2.0])
        selection = cone_select(ens, None, self.cone, 1.0, 1.0)
        factor = trace_formula_a(ens.subset([0]), 1.1 * K1) ** 2
        self.assertAlmostEqual(abs(selection.c_modified[0] - 2.0 * factor), 0, places=12)

    def test_velocity_consistency(self):
        ens = SolitonEnsemble([0.9 * K1, 1.1 * K1, 1.3 * K1], [1.0, 1.0, 1.0])
        selection = cone_select(ens, None, self.cone, 1.0, 1.0)
        speeds = velocity(ens.k, 1.0, 1.0)
        inside = (speeds >= self.cone[2]) & (speeds <= self.cone[3])
        np.testing.assert_array_equal(np.nonzero(inside)[0], selection.k_in)

    def test_degenerate_cone(self):
        ens = SolitonEnsemble([K1], [1.0])
        with self.assertRaises(DegenerateCone):
            cone_select(ens, None, (0.0, 1.0, -1.0, -0.5), 1.0, 1.0)
        with self.assertRaises(DegenerateCone):
            cone_select(ens, None, (0.0, 1.0, -0.5, 0.1), 1.0, 1.0)


class TestPCCoefficients(unittest.TestCase):
    def test_modulus(self):
        pc = pc_coefficients(1.0, 0.1, 1.0, 1.0, 20.0)
        self.assertAlmostEqual(abs(pc.r0), 1.0, places=12)
        self.assertAlmostEqual(abs(pc.beta12), 0.2160, places=4)

    def test_reflection_identity(self):
        for nu, r in ((0.1, 0.5 + 0.2j), (-0.3, 1.3), (0.02, 0.1j)):
            pc = pc_coefficients(r, nu, 1.1 - 0.1j, 0.8, 35.0)
            expected = 2 * nu * np.sinh(np.pi * nu) * np.exp(-np.pi * nu) / abs(pc.r0) ** 2
            self.assertAlmostEqual(abs(pc.beta12 * pc.beta21), expected, places=10)

    def test_vanishing_nu(self):
        self.assertEqual(pc_coefficients(0.5, 0.0, 1.0, 1.0, 20.0).m1_norm, 0)
        self.assertLess(pc_coefficients(0.5, 1e-12, 1.0, 1.0, 20.0).m1_norm, 1e-10)

    def test_zero_reflection(self):
        self.assertEqual(pc_coefficients(0j, 0.1, 1.0, 1.0, 20.0).m1_norm, 0)

    def test_overflow(self):
        with self.assertRaises(GammaOverflow):
            pc_coefficients(0.5, 60.0, 1.0, 1.0, 20.0)

    def test_gamma_recurrence(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(-5, 5, 100) + 1j * rng.uniform(-10, 10, 100)
        np.testing.assert_allclose(rgamma(z), z * rgamma(z + 1), rtol=1e-10)


class TestLeadingAsymptotic(unittest.TestCase):
    def setUp(self):
        self.cone = (-2.0, 2.0, -0.6, -0.2)

    def test_reflectionless_soliton(self):
        k = 1.2 * K1
        ens = SolitonEnsemble([k], [0.8])
        x, t = velocity(k, 1.0, 2.0) * 20.0 + 0.3, 20.0
        lead = leading_asymptotic(ens, None, self.cone, x, t)
        exact = reconstruct(solve_reflectionless(ens, None, x, t), ens)
        self.assertEqual(lead.u_lead, exact.u_value)
        self.assertEqual(lead.correction_bound, 0.0)
        self.assertFalse(lead.pre_asymptotic)

    def test_bound_scales_like_inverse_root_time(self):
        sd = radiation_data()
        empty = SolitonEnsemble.empty()
        first = leading_asymptotic(empty, sd, self.cone, -0.4 * 20, 20.0)
        second = leading_asymptotic(empty, sd, self.cone, -0.4 * 40, 40.0)
        self.assertEqual(first.u_lead, 0)
        self.assertGreater(first.correction_bound, 0)
        self.assertAlmostEqual(first.correction_bound / second.correction_bound, np.sqrt(2),
                               places=12)

    def test_nu_signs(self):
        geo = stationary_nu(stationary_points(1.0, 2.0, 0.6), radiation_data())
        self.assertTrue(np.all(geo.nu[[0, 2]] <= 0))
        self.assertTrue(np.all(geo.nu[[1, 3]] >= 0))

    def test_bound_without_reflection(self):
        geo = stationary_points(1.0, 2.0, 0.6)
        self.assertEqual(correction_bound(None, geo, 50.0), 0.0)
        self.assertIsInstance(geo, PhaseGeometry)

    def test_outside_cone(self):
        with self.assertRaises(OutsideCone):
            leading_asymptotic(SolitonEnsemble.empty(), None, self.cone, 50.0, 20.0)

    def test_pre_asymptotic_warning(self):
        with self.assertLogs("flist", "WARNING"):
            lead = leading_asymptotic(SolitonEnsemble.empty(), None, self.cone, -1.0, 5.0)
        self.assertTrue(lead.pre_asymptotic)


class TestFitDecayRate(unittest.TestCase):
    def setUp(self):
        self.t = np.array([50.0, 100.0, 200.0, 400.0])

    def test_exact_power_laws(self):
        for power in (-0.5, -0.75, 0.0):
            slope, intercept = fit_decay_rate(list(zip(self.t, 3.0 * self.t**power)))
            self.assertAlmostEqual(slope, power, places=12)
            self.assertAlmostEqual(intercept, np.log(3.0), places=10)

    def test_insufficient_samples(self):
        with self.assertRaises(InsufficientSamples):
            fit_decay_rate([(1.0, 1.0), (2.0, 0.5), (3.0, 0.3)])
        with self.assertRaises(InsufficientSamples):
            fit_decay_rate(list(zip(self.t, [1.0, 0.5, 0.0, 0.1])))
        with self.assertRaises(InsufficientSamples):
            fit_decay_rate(list(zip(self.t[::-1], [1.0, 0.5, 0.2, 0.1])))


if __name__ == "__main__":
    unittest.main()
