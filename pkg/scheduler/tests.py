import itertools
import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from density.distributions import Density, trial_seed
from geometry.coordinates import DiskPoint, SeekModel, seek_time
from peeling.layers import peel_cylinder_ver

from .curves import LayerCurves, first_crossing, layer_chain_order
from .tours import (
    EXACT_LIMIT, Tour, abz, exact_service_time, modified_abz, sandwich_bounds, sandwich_check,
    validate_tour,
)


def brute_force_service_time(points, model):
    origin = DiskPoint(0.0, 0.0)
    best = math.inf
    for perm in itertools.permutations(range(len(points))):
        t, here = 0.0, origin
        for j in perm:
            t += seek_time(here, points[j], model)
            here = points[j]
        best = min(best, math.ceil(t + here.r / model.c))
    return max(1, best)


class ChainOrderTests(SimpleTestCase):

    def test_documented_layer(self):
        order = layer_chain_order(np.array([[0.6, 0.55], [0.1, 0.5]]), SeekModel(1))
        self.assertEqual(order.tolist(), [1, 0])

    def test_comparable_pair_is_not_an_antichain(self):
        with self.assertRaises(ValidationError):
            layer_chain_order(np.array([[0.1, 0.1], [0.15, 0.9]]), SeekModel(1))


class LayerCurveTests(SimpleTestCase):

    def setUp(self):
        self.model = SeekModel(1)
        self.batch = Density.uniform().sample(300, seed=14)
        self.layers = peel_cylinder_ver(self.batch, self.model)
        self.curves = LayerCurves.from_layers(self.batch, self.layers, self.model)

    def test_curves_increase_with_the_layer(self):
        grid = np.arange(0.0, 1.0, 1e-3)
        values = self.curves.values_on_grid(grid)
        self.assertEqual(values.shape, (self.layers.depth, len(grid)))
        self.assertTrue(np.all(np.diff(values, axis=0) >= 0))

    def test_requests_lie_on_their_layer_curve(self):
        for i, members in enumerate(self.layers.layers, start=1):
            on_curve = self.curves.values_on_grid(self.batch.thetas[members])[i - 1]
            np.testing.assert_allclose(on_curve, self.batch.radii[members], atol=1e-9)

    def test_curve_slopes_are_bounded(self):
        grid = np.linspace(0.0, 1.0, 4001)
        values = self.curves.values_on_grid(grid)
        slopes = np.abs(np.diff(values, axis=1)) / np.diff(grid)
        self.assertLessEqual(slopes.max(), self.model.c + 1e-6)

    def test_entry_points_advance_along_the_line(self):
        entries = self.curves.entry_times
        self.assertTrue(np.all(np.diff(entries) >= 0))
        self.assertTrue(np.all((entries >= 0) & (entries <= 1 / self.model.c)))
        point = self.curves.entry_point(1)
        self.assertAlmostEqual(point.r, self.model.c * point.t)

    def test_first_crossing_of_a_flat_layer(self):
        # a single request at radius 0.4 gives L'(t) = 0.4, crossing r = c t at 0.4 / c
        self.assertAlmostEqual(first_crossing(np.array([0.7]), np.array([0.4]), SeekModel(0.5)), 0.8)


class TourTests(SimpleTestCase):

    def test_single_request_tours(self):
        model = SeekModel(1)
        batch = [DiskPoint(0.3, 0.2)]
        for algorithm in (modified_abz, abz):
            tour = algorithm(batch, model)
            self.assertEqual(tour.k, 1)
            self.assertTrue(validate_tour(tour, batch, model))
        self.assertEqual(exact_service_time(batch, model), 1)

    def test_empty_batch_is_rejected(self):
        for algorithm in (modified_abz, abz, exact_service_time):
            with self.assertRaises(ValidationError):
                algorithm([], SeekModel(1))

    def test_tours_are_valid(self):
        for c in (0.3, 1.0, 3.0):
            model = SeekModel(c)
            batch = Density.from_function(lambda r: 2 * r).sample(1000, seed=int(10 * c))
            for algorithm in (modified_abz, abz):
                tour = algorithm(batch, model)
                self.assertTrue(validate_tour(tour, batch, model), f'{tour.algorithm} c={c}')

    def test_modified_tour_serves_one_layer_per_rotation(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(500, seed=3)
        tour = modified_abz(batch, model)
        layers = tour.layers[1:-1]
        self.assertTrue(np.all(np.diff(layers) >= 0))
        depth = peel_cylinder_ver(batch, model).depth
        self.assertLessEqual(tour.k, depth + 1 + 2 / model.c)

    def test_swapped_visits_are_invalid(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(50, seed=8)
        tour = modified_abz(batch, model)
        order = np.arange(len(tour))
        order[[1, 2]] = order[[2, 1]]
        swapped = Tour(times=tour.times[order], radii=tour.radii[order], request_ids=tour.request_ids[order],
                       layers=tour.layers[order], k=tour.k, algorithm='swapped')
        self.assertFalse(validate_tour(swapped, batch, model))

    def test_missing_request_is_invalid(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(50, seed=8)
        tour = abz(batch, model)
        keep = np.delete(np.arange(len(tour)), 5)
        shorter = Tour(times=tour.times[keep], radii=tour.radii[keep], request_ids=tour.request_ids[keep],
                       layers=tour.layers[keep], k=tour.k, algorithm='short')
        self.assertFalse(validate_tour(shorter, batch, model))

    def test_export_frame(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(10, seed=1)
        frame = modified_abz(batch, model).to_frame()
        self.assertEqual(list(frame.columns), ['t', 'r', 'wrapped_theta', 'layer', 'request_id'])
        self.assertEqual(len(frame), 12)
        self.assertEqual(sorted(frame['request_id'][1:-1]), list(range(10)))

    def test_service_times_by_request(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(20, seed=6)
        tour = abz(batch, model)
        service = tour.service_times
        np.testing.assert_allclose(np.mod(service, 1.0), batch.thetas, atol=1e-9)


class ExactServiceTimeTests(SimpleTestCase):

    def test_matches_permutation_search(self):
        for c in (0.5, 1.0, 2.0):
            model = SeekModel(c)
            for seed in range(15):
                batch = Density.uniform().sample(5, seed=seed)
                self.assertEqual(exact_service_time(batch, model), brute_force_service_time(list(batch), model))

    def test_rejects_large_batches(self):
        batch = Density.uniform().sample(EXACT_LIMIT + 1, seed=1)
        with self.assertRaises(ValidationError):
            exact_service_time(batch, SeekModel(1))

    def test_never_beats_the_tours(self):
        model = SeekModel(0.8)
        for seed in range(10):
            batch = Density.uniform().sample(8, seed=seed)
            exact = exact_service_time(batch, model)
            self.assertLessEqual(exact, modified_abz(batch, model).k)
            self.assertLessEqual(exact, abz(batch, model).k)


class SandwichTests(SimpleTestCase):

    def run_sandwich(self, trials):
        for c in (0.5, 1.0, 2.0):
            model = SeekModel(c)
            for n in range(2, EXACT_LIMIT + 1):
                for trial in range(trials):
                    batch = Density.uniform().sample(n, seed=trial_seed(7, n, trial))
                    report = sandwich_check(batch, model)
                    self.assertTrue(report.holds, report.as_dict())
                    self.assertLessEqual(abs(report.k_abz - report.k_modified), 2 + 3 / c)

    def test_small_batches(self):
        self.run_sandwich(trials=40)

    @tag('slow')
    def test_thousand_trials_per_size(self):
        self.run_sandwich(trials=1000)

    def test_bounds(self):
        self.assertEqual(sandwich_bounds(10, SeekModel(1)), (8.0, 13.0))

    def test_report_for_large_batch_has_no_exact_value(self):
        report = sandwich_check(Density.uniform().sample(200, seed=2), SeekModel(1))
        self.assertIsNone(report.k_exact)
        self.assertTrue(report.holds)
