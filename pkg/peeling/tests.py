import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from density.distributions import Density, trial_seed
from geometry.coordinates import DiskPoint, OrderKind, SeekModel, leq_ver_cyl
from geometry.exceptions import GeneralPositionError

from .layers import lis_length, longest_chain, patience_peel, peel, peel_cylinder_ver, peel_oracle


class PatiencePeelTests(SimpleTestCase):

    def test_increasing_points_form_one_chain(self):
        layers = patience_peel(np.array([[1, 1], [2, 2], [3, 3]], dtype=float))
        self.assertEqual(layers.layer_of.tolist(), [1, 2, 3])
        self.assertEqual(layers.depth, 3)

    def test_decreasing_points_form_one_layer(self):
        layers = patience_peel(np.array([[1, 3], [2, 2], [3, 1]], dtype=float))
        self.assertEqual(layers.layer_of.tolist(), [1, 1, 1])
        self.assertEqual(layers.pred.tolist(), [-1, -1, -1])

    def test_duplicate_coordinate_is_rejected(self):
        with self.assertRaises(GeneralPositionError) as ctx:
            patience_peel(np.array([[1, 3], [2, 3]], dtype=float))
        self.assertEqual(ctx.exception.pair, (0, 1))

    def test_empty_batch(self):
        layers = patience_peel(np.empty((0, 2)))
        self.assertEqual(layers.depth, 0)
        self.assertEqual(layers.layers, [])
        self.assertEqual(longest_chain(layers), [])

    def test_matches_oracle_on_random_points(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            pts = rng.random((60, 2))
            fast = patience_peel(pts)
            slow = peel_oracle(pts, OrderKind.INC_PLANE)
            np.testing.assert_array_equal(fast.layer_of, slow.layer_of)

    def test_predecessor_is_below_on_previous_layer(self):
        pts = np.random.default_rng(5).random((300, 2))
        layers = patience_peel(pts)
        for i, p in enumerate(layers.pred):
            if p >= 0:
                self.assertEqual(layers.layer_of[p], layers.layer_of[i] - 1)
                self.assertTrue(np.all(pts[p] < pts[i]))

    def test_layer_listing_partitions_requests(self):
        layers = patience_peel(np.random.default_rng(6).random((100, 2)))
        listed = np.sort(np.concatenate(layers.layers))
        np.testing.assert_array_equal(listed, np.arange(100))
        self.assertEqual(layers.layer_sizes().sum(), 100)


class LisTests(SimpleTestCase):

    def test_documented_permutation(self):
        self.assertEqual(lis_length([3, 1, 2]), 2)

    def test_identity_and_reverse(self):
        self.assertEqual(lis_length(list(range(1, 11))), 10)
        self.assertEqual(lis_length(list(range(10, 0, -1))), 1)

    def test_rejects_non_permutation(self):
        with self.assertRaises(ValidationError):
            lis_length([1, 1, 2])

    def test_random_permutations_scale_like_two_root_n(self):
        rng = np.random.default_rng(0)
        n = 10 ** 4
        mean = np.mean([lis_length(rng.permutation(n) + 1) for _ in range(5)])
        self.assertAlmostEqual(mean / np.sqrt(n), 2.0, delta=0.15)


class CylinderPeelTests(SimpleTestCase):

    def test_matches_oracle(self):
        for c in (0.5, 1.0, 2.0):
            model = SeekModel(c)
            for seed in range(8):
                batch = Density.uniform().sample(200, seed=seed)
                fast = peel_cylinder_ver(batch, model)
                slow = peel_oracle(batch, OrderKind.VER_CYLINDER, model)
                np.testing.assert_array_equal(fast.layer_of, slow.layer_of)

    def test_matches_oracle_for_steep_and_shallow_seeks(self):
        batch = Density.from_function(lambda r: 2 * r).sample(150, seed=3)
        for c in (0.2, 5.0):
            model = SeekModel(c)
            np.testing.assert_array_equal(
                peel_cylinder_ver(batch, model).layer_of,
                peel_oracle(batch, OrderKind.VER_CYLINDER, model).layer_of,
            )

    def test_longest_chain_is_a_chain(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(400, seed=9)
        layers = peel_cylinder_ver(batch, model)
        chain = longest_chain(layers)
        self.assertEqual(len(chain), layers.depth)
        for a, b in zip(chain, chain[1:]):
            self.assertTrue(leq_ver_cyl(batch[a], batch[b], model))

    def test_predecessors_are_comparable(self):
        model = SeekModel(0.7)
        batch = Density.uniform().sample(300, seed=4)
        layers = peel_cylinder_ver(batch, model)
        for i, p in enumerate(layers.pred):
            if p >= 0:
                self.assertEqual(layers.layer_of[p], layers.layer_of[i] - 1)
                self.assertTrue(leq_ver_cyl(batch[p], batch[i], model))

    def test_layers_are_antichains(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(120, seed=2)
        for layer in peel_cylinder_ver(batch, model).layers:
            for a in layer:
                for b in layer:
                    if a != b:
                        self.assertFalse(leq_ver_cyl(batch[a], batch[b], model))

    def test_tie_is_rejected(self):
        # dyadic coordinates so that dt == dr holds exactly
        points = [DiskPoint(0.125, 0.25), DiskPoint(0.375, 0.5)]
        with self.assertRaises(GeneralPositionError) as ctx:
            peel_cylinder_ver(points, SeekModel(1))
        self.assertEqual(ctx.exception.pair, (0, 1))
        with self.assertRaises(GeneralPositionError):
            peel_oracle(points, OrderKind.VER_CYLINDER, SeekModel(1))

    def test_tie_through_a_lift_is_rejected(self):
        # 1 - 0.75 = 0.25 rotations apart the short way round
        points = [DiskPoint(0.75, 0.25), DiskPoint(0.0, 0.5)]
        with self.assertRaises(GeneralPositionError):
            peel_cylinder_ver(points, SeekModel(1))

    def test_near_tie_is_peeled(self):
        points = [DiskPoint(0.125, 0.25), DiskPoint(0.375, 0.5 + 1e-12)]
        layers = peel_cylinder_ver(points, SeekModel(1))
        self.assertEqual(layers.layer_of.tolist(), [1, 2])

    def test_dispatch(self):
        batch = Density.uniform().sample(50, seed=1)
        model = SeekModel(1)
        np.testing.assert_array_equal(
            peel(batch, OrderKind.VER_CYLINDER, model).layer_of,
            peel_cylinder_ver(batch, model).layer_of,
        )
        self.assertEqual(peel(batch, OrderKind.HOR_STRIP, model).depth,
                         peel_oracle(batch, OrderKind.HOR_STRIP, model).depth)

    def test_depth_grows_like_root_n(self):
        model = SeekModel(1)
        batch = Density.uniform().sample(2 * 10 ** 4, seed=21)
        depth = peel_cylinder_ver(batch, model).depth
        # sqrt(2n/c) up to a correction of order n^(1/6)
        self.assertGreater(depth, 0.9 * np.sqrt(2 * len(batch)))
        self.assertLess(depth, 1.15 * np.sqrt(2 * len(batch)))

    def test_sampled_batch_of_hundred_thousand_is_peeled(self):
        n = 10 ** 5
        batch = Density.uniform().sample(n, seed=trial_seed(20240601, n, 0))
        layers = peel_cylinder_ver(batch, SeekModel(1))
        self.assertEqual(len(layers.layer_of), n)
        self.assertGreater(layers.depth, 0.9 * np.sqrt(2 * n))
        self.assertLess(layers.depth, 1.15 * np.sqrt(2 * n))

    def test_insertion_never_lowers_a_layer(self):
        model = SeekModel(0.8)
        rng = np.random.default_rng(31)
        batch = Density.uniform().sample(150, seed=8).points
        before = peel_cylinder_ver(batch, model)
        for _ in range(20):
            extra = np.array([[rng.random(), rng.random()]])
            after = peel_cylinder_ver(np.vstack([batch, extra]), model)
            self.assertGreaterEqual(after.depth, before.depth)
            self.assertTrue(np.all(after.layer_of[:len(batch)] >= before.layer_of))
            self.assertLessEqual(after.depth, before.depth + 1)


@tag('slow')
class OracleAgreementTests(SimpleTestCase):

    def test_band_peel_matches_oracle_across_sizes_and_slopes(self):
        density = Density.uniform()
        for c in (1 / 3, 0.5, 1.0, 2.0):
            model = SeekModel(c)
            for n in (10, 100, 500):
                for instance in range(100):
                    batch = density.sample(n, seed=trial_seed(20240601, n, instance))
                    fast = peel_cylinder_ver(batch, model)
                    slow = peel_oracle(batch, OrderKind.VER_CYLINDER, model)
                    np.testing.assert_array_equal(
                        fast.layer_of, slow.layer_of, err_msg=f'c={c} n={n} instance={instance}')
