import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from density.distributions import Density
from geometry.coordinates import SeekModel
from peeling.layers import patience_peel, peel_cylinder_ver
from scheduler.tours import modified_abz

from .functionals import (
    CurveOnGrid, analytic_m_radial, dz_functional, maximize_dz, maximize_vertical_functional,
    monte_carlo_lis, to_increasing_frame, vertical_functional,
)
from .profiles import (
    StepProfile, empirical_layer_profile, empirical_service_profile, fine_asymptotics_band, fine_constants,
    served_fraction_radial, uniform_square_pile_profile,
)


def constant(value):
    return lambda x, y: np.full(np.broadcast(x, y).shape, float(value))


def bump_table(size=33):
    thetas = np.linspace(0.0, 1.0, size)
    radii = np.linspace(0.0, 1.0, size)
    return 1.0 + 0.9 * np.outer(np.cos(2 * np.pi * thetas), np.sin(np.pi * radii))


class IncreasingPathFunctionalTests(SimpleTestCase):

    def test_diagonal_of_uniform_square(self):
        xs = np.linspace(0.0, 1.0, 101)
        self.assertAlmostEqual(dz_functional(CurveOnGrid(xs, xs), constant(1)), 2.0, places=12)

    def test_parabola(self):
        xs = np.linspace(0.0, 1.0, 2001)
        value = dz_functional(CurveOnGrid(xs, xs ** 2), constant(1))
        self.assertAlmostEqual(value, 4 * math.sqrt(2) / 3, delta=1e-3)

    def test_flat_curve_is_worth_nothing(self):
        xs = np.linspace(0.0, 1.0, 11)
        self.assertEqual(dz_functional(CurveOnGrid(xs, np.full(11, 0.5)), constant(1)), 0.0)

    def test_rejects_decreasing_curve(self):
        xs = np.linspace(0.0, 1.0, 11)
        with self.assertRaises(ValidationError):
            dz_functional(CurveOnGrid(xs, 1 - xs), constant(1))

    def test_accepts_a_density(self):
        xs = np.linspace(0.0, 1.0, 51)
        self.assertAlmostEqual(dz_functional(CurveOnGrid(xs, xs), Density.uniform()), 2.0, places=12)


class MaximizeDzTests(SimpleTestCase):

    def test_uniform_square(self):
        prediction = maximize_dz(constant(1), m=200, w=8)
        self.assertAlmostEqual(prediction.m, 2.0, delta=0.02)
        self.assertEqual(prediction.method, 'grid_dp')
        phi = prediction.maximizer
        self.assertLessEqual(np.max(np.abs(phi.values - phi.xs)), 1e-2)

    def test_mass_on_a_sub_square(self):
        q = lambda x, y: np.where((np.asarray(x) < 0.5) & (np.asarray(y) < 0.5), 4.0, 0.0)
        self.assertAlmostEqual(maximize_dz(q, m=400, w=4).m, 2.0, delta=0.02)

    def test_maximizer_is_monotone_with_fixed_ends(self):
        q = lambda x, y: 1.0 + np.asarray(x) * np.asarray(y) * 3.0
        phi = maximize_dz(q, m=60, w=4).maximizer
        self.assertTrue(phi.is_monotone())
        self.assertEqual(phi.values[0], 0.0)
        self.assertAlmostEqual(phi.values[-1], 1.0)

    def test_dp_value_is_attained_by_its_maximizer(self):
        prediction = maximize_dz(constant(1), m=50, w=3)
        self.assertAlmostEqual(dz_functional(prediction.maximizer, constant(1)), prediction.m, places=9)

    def test_rejects_bad_grid(self):
        with self.assertRaises(ValidationError):
            maximize_dz(constant(1), m=0)


class MonteCarloTests(SimpleTestCase):

    def test_estimate_is_tagged(self):
        prediction = monte_carlo_lis(Density.uniform(), n=2000, trials=3, seed=5)
        self.assertEqual(prediction.method, 'monte_carlo')
        self.assertGreater(prediction.m, 1.6)
        self.assertLess(prediction.m, 2.05)

    @tag('slow')
    def test_agrees_with_grid_dp(self):
        estimate = monte_carlo_lis(Density.uniform(), n=4 * 10 ** 5, trials=2, seed=1).m
        self.assertAlmostEqual(estimate, maximize_dz(constant(1)).m, delta=0.05)


class VerticalFunctionalTests(SimpleTestCase):

    def test_closed_form_examples(self):
        self.assertAlmostEqual(analytic_m_radial(Density.uniform(), SeekModel(1)), math.sqrt(2))
        self.assertAlmostEqual(analytic_m_radial(Density.uniform(), SeekModel(0.5)), 2.0)
        linear = Density.from_function(lambda r: 2 * r)
        self.assertAlmostEqual(analytic_m_radial(linear, SeekModel(1)), 4.0 / 3.0, delta=1e-8)

    def test_closed_form_needs_radial_density(self):
        with self.assertRaises(ValidationError):
            analytic_m_radial(Density.general_grid(bump_table()), SeekModel(1))

    def test_grid_dp_matches_closed_form_for_radial_densities(self):
        for density in (Density.uniform(), Density.from_function(lambda r: 2 * r),
                        Density.radial_step([0, 0.4, 1], [3, 1])):
            for c in (0.5, 1.0, 2.0):
                model = SeekModel(c)
                prediction = maximize_vertical_functional(density, model, grid=200)
                self.assertAlmostEqual(prediction.m, analytic_m_radial(density, model), delta=0.02)

    def test_radial_maximizer_is_vertical(self):
        prediction = maximize_vertical_functional(Density.from_function(lambda r: 2 * r), SeekModel(0.5), grid=100)
        self.assertEqual(prediction.maximizer.max_slope(), 0.0)

    def test_angular_bump_beats_every_vertical(self):
        model = SeekModel(0.5)
        density = Density.general_grid(bump_table())
        grid = 120
        prediction = maximize_vertical_functional(density, model, grid=grid)
        radii = np.linspace(0.0, 1.0, grid + 1)
        best_vertical = max(
            vertical_functional(CurveOnGrid(radii, np.full(grid + 1, i / grid), kind='slope_bounded'), density, model)
            for i in range(grid)
        )
        self.assertGreaterEqual(prediction.m + 1e-9, best_vertical)
        self.assertLessEqual(prediction.maximizer.max_slope(), 1 / model.c + 1e-9)

    def test_rejects_steep_curve(self):
        radii = np.linspace(0.0, 1.0, 11)
        with self.assertRaises(ValidationError):
            vertical_functional(CurveOnGrid(radii, 3 * radii), Density.uniform(), SeekModel(1))

    def test_change_of_frame_preserves_the_value(self):
        radii = np.linspace(0.0, 1.0, 401)
        psi = CurveOnGrid(radii, 0.3 + 0.25 * np.sin(3 * radii), kind='slope_bounded')
        for density in (Density.uniform(), Density.general_grid(bump_table())):
            for c in (1.0, 0.6):
                model = SeekModel(c)
                phi, q = to_increasing_frame(psi, density, model)
                self.assertAlmostEqual(dz_functional(phi, q), vertical_functional(psi, density, model), delta=1e-6)


class ProfileTests(SimpleTestCase):

    def test_uniform_disk_half_way(self):
        value = served_fraction_radial(math.sqrt(2) / 2, Density.uniform(), SeekModel(1))
        self.assertAlmostEqual(value, 0.5, delta=1e-6)

    def test_profile_limits(self):
        density, model = Density.from_function(lambda r: 2 * r), SeekModel(0.7)
        self.assertEqual(served_fraction_radial(0.0, density, model), 0.0)
        self.assertEqual(served_fraction_radial(analytic_m_radial(density, model), density, model), 1.0)
        values = served_fraction_radial(np.linspace(0, 1, 21), density, model)
        self.assertTrue(np.all(np.diff(values) >= 0))

    def test_out_of_range_tau_is_clamped(self):
        with self.assertLogs('analytics.profiles', level='WARNING'):
            self.assertEqual(served_fraction_radial(10.0, Density.uniform(), SeekModel(1)), 1.0)

    def test_pile_profile(self):
        self.assertEqual(uniform_square_pile_profile(0.0), 0.0)
        self.assertAlmostEqual(uniform_square_pile_profile(2.0), 1.0)
        self.assertAlmostEqual(uniform_square_pile_profile(1.0), 0.5 * math.log(2) + 0.25)
        with self.assertRaises(ValidationError):
            uniform_square_pile_profile(2.5)

    def test_step_profile_sup_distance(self):
        profile = StepProfile(jumps=np.array([0.5, 1.0]), fractions=np.array([0.5, 1.0]))
        self.assertEqual(float(profile(0.25)), 0.0)
        self.assertEqual(float(profile(0.75)), 0.5)
        # against the identity on [0, 1] the worst gap is at a left limit
        self.assertAlmostEqual(profile.sup_distance(lambda t: np.asarray(t)), 0.5)

    def test_layer_profile_tracks_prediction(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(2 * 10 ** 4, seed=17)
        layers = peel_cylinder_ver(batch, model)
        profile = empirical_layer_profile(layers)
        self.assertEqual(profile.fractions[-1], 1.0)
        distance = profile.sup_distance(lambda t: served_fraction_radial(t, Density.uniform(), model),
                                        tau_max=analytic_m_radial(Density.uniform(), model))
        self.assertLess(distance, 0.1)

    def test_service_profile_from_a_tour(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(5000, seed=2)
        profile = empirical_service_profile(modified_abz(batch, model))
        self.assertEqual(len(profile.jumps), 5000)
        self.assertTrue(np.all(np.diff(profile.jumps) >= 0))
        self.assertEqual(profile.fractions[-1], 1.0)

    def test_square_pile_profile_tracks_closed_form(self):
        points = Density.uniform().sample(2 * 10 ** 4, seed=4).points
        profile = empirical_layer_profile(patience_peel(points))
        self.assertLess(profile.sup_distance(uniform_square_pile_profile, tau_max=2.0), 0.1)


class FineAsymptoticsTests(SimpleTestCase):

    def test_constants_for_unit_slope(self):
        lower, upper = fine_constants(SeekModel(1))
        self.assertAlmostEqual(lower, 0.222725, delta=1e-4)
        self.assertAlmostEqual(upper, 0.46329, delta=1e-4)

    def test_band_at_e_to_the_eighth(self):
        lower, upper = fine_asymptotics_band(math.exp(8), SeekModel(1))
        self.assertAlmostEqual(lower, 4 * 0.222725, delta=4e-4)
        self.assertAlmostEqual(upper, 4 * 0.46329, delta=4e-4)

    def test_scaled_band_carries_sixth_root(self):
        plain = fine_asymptotics_band(10 ** 6, SeekModel(1))
        scaled = fine_asymptotics_band(10 ** 6, SeekModel(1), scaled=True)
        self.assertAlmostEqual(scaled[0] / plain[0], 10.0)

    def test_rejects_tiny_n(self):
        with self.assertRaises(ValidationError):
            fine_asymptotics_band(1, SeekModel(1))
