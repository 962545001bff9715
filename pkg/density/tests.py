import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from scipy import stats

from geometry.coordinates import SeekModel
from geometry.exceptions import GeneralPositionError

from .distributions import Density, SampleBatch, dump_density, load_density, trial_seed
from .forms import DensitySpecForm


def linear_density():
    return Density.from_function(lambda r: 2.0 * r)


class DensityEvaluationTests(SimpleTestCase):

    def test_step_density_value(self):
        step = Density.radial_step([0, 0.5, 1], [2, 0])
        self.assertEqual(step.evaluate(0.1, 0.25), 2.0)
        self.assertEqual(step.evaluate(0.9, 0.75), 0.0)

    def test_unnormalised_input_is_normalised(self):
        step = Density.radial_step([0, 0.5, 1], [6, 0])
        self.assertAlmostEqual(step.evaluate(0.0, 0.1), 2.0)

    def test_constant_grid_is_uniform(self):
        grid = Density.general_grid(np.full((5, 5), 3.0))
        self.assertAlmostEqual(grid.evaluate(0.37, 0.81), 1.0)

    def test_rejects_out_of_domain(self):
        with self.assertRaises(ValidationError):
            Density.uniform().evaluate(0.5, 1.2)
        with self.assertRaises(ValidationError):
            Density.uniform().evaluate(-0.1, 0.5)

    def test_rejects_zero_density(self):
        with self.assertRaises(ValidationError):
            Density.radial_step([0, 1], [0])

    def test_total_mass_is_one(self):
        bump = np.add.outer(1 + 0.5 * np.cos(2 * np.pi * np.linspace(0, 1, 9)), np.linspace(0, 1, 9))
        for density in (Density.uniform(), Density.radial_step([0, 0.3, 1], [1, 4]),
                        linear_density(), Density.general_grid(bump)):
            self.assertAlmostEqual(density.total_mass(), 1.0, delta=1e-6)


class SqrtIntegralTests(SimpleTestCase):

    def test_uniform(self):
        self.assertAlmostEqual(Density.uniform().integral_sqrt_radial(), 1.0, places=12)

    def test_step(self):
        step = Density.radial_step([0, 0.5, 1], [2, 0])
        self.assertAlmostEqual(step.integral_sqrt_radial(), math.sqrt(2) / 2, places=10)

    def test_linear_profile(self):
        # the integral of sqrt(2r) over [0, 1] is 2*sqrt(2)/3
        self.assertAlmostEqual(linear_density().integral_sqrt_radial(), 2 * math.sqrt(2) / 3, delta=1e-8)

    def test_partial_integral_reaches_total(self):
        density = Density.radial_step([0, 0.3, 1], [1, 4])
        self.assertAlmostEqual(density.partial_integral_sqrt_radial(1.0), density.integral_sqrt_radial())
        self.assertEqual(density.partial_integral_sqrt_radial(0.0), 0.0)

    def test_rejects_general_density(self):
        with self.assertRaises(ValidationError):
            Density.general_grid(np.ones((3, 3))).integral_sqrt_radial()

    def test_cdf(self):
        density = linear_density()
        self.assertAlmostEqual(density.radial_cdf(0.5), 0.25, delta=1e-6)
        self.assertEqual(density.radial_cdf(1.0), 1.0)


class SamplingTests(SimpleTestCase):

    def test_same_seed_same_batch(self):
        first = Density.uniform().sample(5, seed=42)
        second = Density.uniform().sample(5, seed=42)
        np.testing.assert_array_equal(first.points, second.points)

    def test_points_stay_in_domain(self):
        for density in (Density.uniform(), linear_density(), Density.general_grid(np.eye(4) + 0.1)):
            batch = density.sample(2000, seed=7)
            self.assertEqual(len(batch), 2000)
            self.assertTrue(np.all((batch.thetas >= 0) & (batch.thetas < 1)))
            self.assertTrue(np.all((batch.radii >= 0) & (batch.radii <= 1)))

    def test_step_support_is_respected(self):
        batch = Density.radial_step([0, 0.5, 1], [2, 0]).sample(10 ** 4, seed=1)
        self.assertEqual(np.mean(batch.radii < 0.5), 1.0)

    def test_linear_profile_radius_distribution(self):
        batch = linear_density().sample(10 ** 5, seed=3)
        # P(r < 1/2) = 1/4 under p(r) = 2r
        self.assertAlmostEqual(np.mean(batch.radii < 0.5), 0.25, delta=0.01)

    def test_grid_sampling_follows_table(self):
        table = np.ones((3, 3))
        table[:, 2] = 5.0
        batch = Density.general_grid(table).sample(2 * 10 ** 4, seed=8)
        # three quarters of the mass sits above r = 1/2
        self.assertAlmostEqual(np.mean(batch.radii > 0.5), 0.75, delta=0.02)

    def test_binned_counts_pass_chi_square(self):
        edges = np.linspace(0.0, 1.0, 11)
        n = 5 * 10 ** 4
        for name, density in (('uniform', Density.uniform()), ('linear', linear_density()),
                              ('step', Density.radial_step([0, 0.3, 1], [0.5, 1.5]))):
            batch = density.sample(n, seed=trial_seed(20240601, n, 0))
            observed, _, _ = np.histogram2d(batch.thetas, batch.radii, bins=[edges, edges])
            ring_mass = np.diff(density.radial_cdf(edges))
            expected = np.outer(np.full(10, 0.1), ring_mass) * n
            result = stats.chisquare(observed.ravel(), expected.ravel() * observed.sum() / expected.sum())
            self.assertGreater(result.pvalue, 1e-3, name)

    def test_empty_sample(self):
        self.assertEqual(len(Density.uniform().sample(0, seed=1)), 0)

    def test_poisson_sample_size(self):
        sizes = [len(Density.uniform().poisson_sample(200.0, seed=s)) for s in range(40)]
        self.assertAlmostEqual(np.mean(sizes), 200, delta=15)

    def test_trial_seeds_are_distinct_and_stable(self):
        seeds = {trial_seed(20240601, 100, t) for t in range(50)}
        self.assertEqual(len(seeds), 50)
        self.assertEqual(trial_seed(1, 2), trial_seed(1, 2))


class SpecDocumentTests(SimpleTestCase):

    def test_form_rejects_mismatched_step(self):
        form = DensitySpecForm(data={'kind': 'radial_step', 'breakpoints': [0, 1], 'values': [1, 2]})
        self.assertFalse(form.is_valid())

    def test_form_rejects_negative_values(self):
        form = DensitySpecForm(data={'kind': 'radial_smooth', 'values': [1, -1, 2]})
        self.assertFalse(form.is_valid())

    def test_spec_round_trip_through_file(self):
        density = Density.radial_step([0, 0.25, 1], [3, 1])
        with tempfile.TemporaryDirectory() as tmp:
            for name in ('density.json', 'density.yaml'):
                path = dump_density(density, Path(tmp) / name)
                loaded = load_density(str(path))
                self.assertEqual(loaded.kind, 'radial_step')
                np.testing.assert_allclose(loaded.values, density.values)

    def test_load_named_uniform(self):
        self.assertEqual(load_density('uniform').kind, 'uniform')

    def test_missing_file_is_a_validation_error(self):
        with self.assertRaises(ValidationError):
            load_density('/nonexistent/density.json')

    def test_unparseable_file(self):
        with tempfile.NamedTemporaryFile('w', suffix='.json', delete=False) as handle:
            handle.write('{not json')
        with self.assertRaises(ValidationError):
            load_density(handle.name)
        Path(handle.name).unlink()


class BatchFileTests(SimpleTestCase):

    def test_csv_round_trip(self):
        batch = Density.uniform().sample(20, seed=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'batch.csv'
            batch.to_csv(path)
            self.assertEqual(path.read_text().splitlines()[0], 'theta,r')
            loaded = SampleBatch.from_csv(path, SeekModel(1))
        np.testing.assert_array_equal(loaded.points, batch.points)

    def test_csv_round_trip_is_bit_exact(self):
        batch = Density.from_function(lambda r: 2 * r).sample(1000, seed=trial_seed(20240601, 1000, 0))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'batch.csv'
            batch.to_csv(path)
            loaded = SampleBatch.from_csv(path)
        self.assertTrue(np.array_equal(loaded.points, batch.points))

    def test_loaded_batch_must_be_in_general_position(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'batch.csv'
            path.write_text('theta,r\n0.1,0.2\n0.3,0.4\n')
            with self.assertRaises(GeneralPositionError) as ctx:
                SampleBatch.from_csv(path, SeekModel(1))
            self.assertEqual(ctx.exception.pair, (0, 1))

    def test_out_of_range_rows(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'batch.csv'
            path.write_text('theta,r\n1.5,0.2\n')
            with self.assertRaises(ValidationError):
                SampleBatch.from_csv(path)

    def test_batch_items_are_disk_points(self):
        batch = SampleBatch(points=json.loads('[[0.25, 0.5]]'))
        self.assertEqual(batch[0].theta, 0.25)
