"""
Unit tests for the quadtree nearest-neighbour index
"""

import os
import sys
import unittest

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.errors import EmptyIndex
from core.spatial_index import Rectangle, SpatialIndex2D, nearest


class TestSpatialIndex(unittest.TestCase):
    """Exact nearest-neighbour queries"""

    def test_single_point(self):
        distance, point = nearest(SpatialIndex2D([(0.0, 0.0)]), (3.0, 4.0))
        self.assertEqual(distance, 5.0)
        np.testing.assert_array_equal(point, [0.0, 0.0])

    def test_empty_index(self):
        with self.assertRaises(EmptyIndex):
            SpatialIndex2D(np.zeros((0, 2))).nearest((0.0, 0.0))

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(0)
        points = rng.uniform(-5, 5, (10000, 2))
        index = SpatialIndex2D(points)
        for query in rng.uniform(-6, 6, (100, 2)):
            expected = np.min(np.linalg.norm(points - query, axis=1))
            distance, point, position = index.nearest(query)
            self.assertAlmostEqual(distance, expected, places=12)
            np.testing.assert_array_equal(point, points[position])

    def test_ties_go_to_first_inserted(self):
        index = SpatialIndex2D([(1.0, 0.0), (-1.0, 0.0), (1.0, 0.0)])
        _, _, position = index.nearest((0.0, 0.0))
        self.assertEqual(position, 0)

    def test_duplicate_points_terminate(self):
        index = SpatialIndex2D(np.ones((100, 2)), max_items_per_leaf=4)
        distance, _, position = index.nearest((1.0, 2.0))
        self.assertEqual(distance, 1.0)
        self.assertEqual(position, 0)

    def test_subdivides_large_sets(self):
        points = np.random.default_rng(1).uniform(0, 1, (500, 2))
        self.assertGreater(SpatialIndex2D(points, max_items_per_leaf=8).max_depth(), 1)
        self.assertEqual(len(SpatialIndex2D(points)), 500)

    def test_nearest_distances(self):
        index = SpatialIndex2D([(0.0, 0.0), (10.0, 0.0)])
        np.testing.assert_allclose(index.nearest_distances([(1.0, 0.0), (9.0, 0.0), (5.0, 0.0)]), [1.0, 1.0, 5.0])


class TestRectangle(unittest.TestCase):

    def test_distance_inside_is_zero(self):
        self.assertEqual(Rectangle(0, 1, 0, 1).distance_sq(0.5, 0.5), 0.0)
        self.assertEqual(Rectangle(0, 1, 0, 1).distance_sq(3.0, 1.0), 4.0)

    def test_centric_split_covers_parent(self):
        quadrants = Rectangle(0, 2, 0, 2).centric_split()
        self.assertEqual(quadrants[0], Rectangle(0, 1, 0, 1))
        self.assertEqual(quadrants[3], Rectangle(1, 2, 1, 2))


if __name__ == "__main__":
    unittest.main()
