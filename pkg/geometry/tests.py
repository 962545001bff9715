import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from .coordinates import (
    DiskPoint, OrderKind, PlanePoint, SeekModel, StripPoint, comparability_matrix,
    find_tie, general_position_check, leq_hor, leq_inc, leq_ver_cyl, leq_ver_strip,
    rotate45, scale_theta, seek_time, seek_time_matrix, unrotate45, wrap,
)
from .exceptions import GeneralPositionError


class WrapTests(SimpleTestCase):

    def test_wraps_into_unit_interval(self):
        self.assertAlmostEqual(wrap(2.3), 0.3, places=12)
        self.assertEqual(wrap(-0.25), 0.75)
        self.assertEqual(wrap(0.0), 0.0)
        self.assertEqual(wrap(-1e-18), 0.0)

    def test_rejects_non_finite(self):
        with self.assertRaises(ValidationError):
            wrap(float('nan'))
        with self.assertRaises(ValidationError):
            wrap(float('inf'))


class SeekTimeTests(SimpleTestCase):

    def test_documented_examples(self):
        self.assertAlmostEqual(seek_time(DiskPoint(0, 0), DiskPoint(0.2, 0.1), SeekModel(1)), 0.2)
        self.assertAlmostEqual(seek_time(DiskPoint(0, 0), DiskPoint(0.2, 0.9), SeekModel(1)), 1.2)
        self.assertAlmostEqual(seek_time(DiskPoint(0.5, 0.5), DiskPoint(0.5, 0.0), SeekModel(0.5)), 1.0)

    def test_same_point_is_free(self):
        p = DiskPoint(0.4, 0.6)
        self.assertEqual(seek_time(p, p, SeekModel(0.3)), 0.0)

    def test_integer_part_counts_full_rotations(self):
        rng = np.random.default_rng(3)
        model = SeekModel(0.7)
        for theta1, r1, theta2, r2 in rng.random((50, 4)):
            value = seek_time(DiskPoint(theta1, r1), DiskPoint(theta2, r2), model)
            self.assertAlmostEqual(value - math.floor(value), wrap(theta2 - theta1), places=9)
            self.assertGreaterEqual(model.c * value + 1e-12, abs(r2 - r1))

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(5)
        pts = rng.random((6, 2))
        model = SeekModel(0.4)
        matrix = seek_time_matrix(pts[:, 0], pts[:, 1], model)
        for i in range(6):
            for j in range(6):
                expected = seek_time(DiskPoint(*pts[i]), DiskPoint(*pts[j]), model)
                self.assertAlmostEqual(matrix[i, j], expected, places=12)

    def test_seek_time_satisfies_triangle_inequality(self):
        rng = np.random.default_rng(17)
        for c in (1 / 3, 1.0, 2.5):
            pts = rng.random((40, 2))
            matrix = seek_time_matrix(pts[:, 0], pts[:, 1], SeekModel(c))
            via = matrix[:, :, None] + matrix[None, :, :]
            # via[i, j, k] is i -> j -> k; compare with i -> k
            self.assertTrue(np.all(matrix[:, None, :] <= via + 1e-9), f'c={c}')


class OrderTests(SimpleTestCase):

    def test_horizontal_example(self):
        self.assertTrue(leq_hor(StripPoint(0.1, 0.2), StripPoint(0.4, 0.4), SeekModel(1)))

    def test_vertical_example(self):
        self.assertTrue(leq_ver_strip(StripPoint(0.1, 0.2), StripPoint(0.15, 0.6), SeekModel(1)))
        self.assertFalse(leq_hor(StripPoint(0.1, 0.2), StripPoint(0.15, 0.6), SeekModel(1)))

    def test_orders_are_complementary(self):
        rng = np.random.default_rng(11)
        model = SeekModel(1.3)
        for t1, r1, t2, r2 in rng.random((200, 4)) * [3, 1, 3, 1]:
            q1, q2 = StripPoint(t1, r1), StripPoint(t2, r2)
            hor = leq_hor(q1, q2, model) or leq_hor(q2, q1, model)
            ver = leq_ver_strip(q1, q2, model) or leq_ver_strip(q2, q1, model)
            self.assertNotEqual(hor, ver)

    def test_cylinder_order_uses_lifts(self):
        model = SeekModel(1)
        self.assertTrue(leq_ver_cyl(DiskPoint(0.95, 0.1), DiskPoint(0.05, 0.5), model))
        self.assertFalse(leq_ver_cyl(DiskPoint(0.05, 0.5), DiskPoint(0.95, 0.1), model))
        self.assertFalse(leq_ver_cyl(DiskPoint(0.0, 0.0), DiskPoint(0.5, 0.2), model))

    def test_rotation_maps_vertical_to_componentwise(self):
        rng = np.random.default_rng(2)
        model = SeekModel(1)
        for t1, r1, t2, r2 in rng.random((200, 4)):
            q1, q2 = StripPoint(t1, r1), StripPoint(t2, r2)
            self.assertEqual(leq_ver_strip(q1, q2, model), leq_inc(rotate45(q1), rotate45(q2)))

    def test_rotation_inverts(self):
        q = StripPoint(0.3, 0.7)
        back = unrotate45(rotate45(q))
        self.assertAlmostEqual(back.t, q.t, places=12)
        self.assertAlmostEqual(back.r, q.r, places=12)
        z = rotate45(StripPoint(1.0, 0.0))
        self.assertAlmostEqual(z.x, 1 / math.sqrt(2))
        self.assertAlmostEqual(z.y, -1 / math.sqrt(2))

    def test_scaling_the_angle(self):
        self.assertEqual(scale_theta(DiskPoint(0.3, 0.5), SeekModel(2)), StripPoint(0.6, 0.5))

    def test_rescaled_order_is_unit_slope(self):
        rng = np.random.default_rng(9)
        model, unit = SeekModel(0.35), SeekModel(1)
        for t1, r1, t2, r2 in rng.random((100, 4)):
            q1, q2 = StripPoint(t1, r1), StripPoint(t2, r2)
            self.assertEqual(
                leq_ver_strip(q1, q2, model),
                leq_ver_strip(scale_theta(q1, model), scale_theta(q2, model), unit),
            )

    def test_orders_are_partial_orders(self):
        rng = np.random.default_rng(23)
        cases = (
            (OrderKind.HOR_STRIP, SeekModel(0.8), [3, 1]),
            (OrderKind.VER_STRIP, SeekModel(1.5), [3, 1]),
            (OrderKind.VER_CYLINDER, SeekModel(1 / 3), [1, 1]),
            (OrderKind.VER_CYLINDER, SeekModel(2), [1, 1]),
            (OrderKind.INC_PLANE, None, [1, 1]),
        )
        for order, model, spread in cases:
            for _ in range(3):
                pts = rng.random((60, 2)) * spread
                leq = comparability_matrix(pts, order, model)
                self.assertTrue(np.all(np.diag(leq)), order)
                both = leq & leq.T
                self.assertTrue(np.array_equal(both, np.eye(60, dtype=bool)), order)
                # i <= j <= k for some j, over every triple
                through = (leq.astype(np.int64) @ leq.astype(np.int64)) > 0
                self.assertTrue(np.all(leq[through]), order)

    def test_matrix_agrees_with_pairwise_order(self):
        rng = np.random.default_rng(4)
        pts = rng.random((25, 2))
        model = SeekModel(0.6)
        matrix = comparability_matrix(pts, OrderKind.VER_CYLINDER, model)
        for i in range(25):
            for j in range(25):
                self.assertEqual(matrix[i, j], leq_ver_cyl(DiskPoint(*pts[i]), DiskPoint(*pts[j]), model))
        plane = comparability_matrix(pts, OrderKind.INC_PLANE)
        self.assertEqual(plane[0, 1], leq_inc(PlanePoint(*pts[0]), PlanePoint(*pts[1])))


class GeneralPositionTests(SimpleTestCase):

    def test_random_batch_is_in_general_position(self):
        pts = np.random.default_rng(1).random((500, 2))
        self.assertIsNone(general_position_check(pts, SeekModel(1)))

    def test_tie_on_seek_boundary_is_reported(self):
        pts = np.array([[0.1, 0.2], [0.5, 0.7], [0.3, 0.4]])
        self.assertEqual(general_position_check(pts, SeekModel(1)), (0, 2))

    def test_tie_through_a_lift_is_reported(self):
        pts = np.array([[0.9, 0.1], [0.2, 0.4]])
        self.assertEqual(general_position_check(pts, SeekModel(1)), (0, 1))

    def test_duplicate_plane_coordinate(self):
        pts = np.array([[0.1, 0.2], [0.1, 0.5]])
        self.assertEqual(find_tie(pts, OrderKind.INC_PLANE), (0, 1))

    def test_error_carries_pair(self):
        error = GeneralPositionError((3, 7))
        self.assertEqual(error.pair, (3, 7))
        self.assertIn('3', error.messages[0])


class ValueTypeTests(SimpleTestCase):

    def test_points_validate_ranges(self):
        with self.assertRaises(ValidationError):
            DiskPoint(1.0, 0.5)
        with self.assertRaises(ValidationError):
            DiskPoint(0.5, 1.5)
        with self.assertRaises(ValidationError):
            StripPoint(float('nan'), 0.5)

    def test_seek_model_validates_slope(self):
        for bad in (0, -1, float('inf')):
            with self.assertRaises(ValidationError):
                SeekModel(bad)
        self.assertEqual(SeekModel(0.3).shift_bound, 4)
        self.assertEqual(SeekModel(0.3).lift_bound, 5)
