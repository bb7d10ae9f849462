"""
Unit tests for candidate circle generation
"""

import os
import sys
import unittest

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.candidates import (CandidateCircle, CandidateSet, disk_is_clear, filter_by_band, generate_candidates,
                             reposition, seed_centers, select_non_overlapping)
from core.errors import EmptyObjectIndex, NoFeasibleCandidate, NoQueriedObject
from core.spatial_index import SpatialIndex2D
from core.taskgrid import CellState, ObjectFootprint, build_task_grid, cells_of_state, rasterize

R_R = 0.2
EPSILON = 0.01


def disk_points(radius: float, step: float = 0.005, center=(0.0, 0.0)) -> np.ndarray:
    axis = np.arange(-radius, radius + step, step)
    xs, ys = np.meshgrid(axis, axis)
    points = np.column_stack([xs.ravel(), ys.ravel()])
    return points[np.hypot(*points.T) <= radius] + np.asarray(center)


def ring_points(radius: float, step: float = 0.002) -> np.ndarray:
    angles = np.arange(0.0, 2 * np.pi, step / radius)
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def object_grid(object_radius: float = 0.3, obstacles=None):
    grid = build_task_grid(ObjectFootprint((0.0, 0.0), object_radius), 0.01)
    grid = rasterize(grid, grid.cell_centers(*np.indices(grid.cells.shape).reshape(2, -1)), CellState.GROUND)
    if obstacles is not None and len(obstacles):
        grid = rasterize(grid, obstacles, CellState.OBSTACLE)
    return rasterize(grid, disk_points(object_radius), CellState.QUERIED_OBJECT)


def assert_valid_candidates(test: unittest.TestCase, grid, candidates: CandidateSet):
    """Brute-force re-check of every constraint on every circle"""
    object_points = cells_of_state(grid, CellState.QUERIED_OBJECT)
    obstacle_points = cells_of_state(grid, CellState.OBSTACLE)
    centers = candidates.centers
    for center in centers:
        to_object = np.min(np.linalg.norm(object_points - center, axis=1))
        test.assertGreaterEqual(to_object, R_R / 2.0 - 1e-9)
        test.assertLessEqual(to_object, 1.5 * R_R + EPSILON + 1e-9)
        if len(obstacle_points):
            test.assertGreater(np.min(np.linalg.norm(obstacle_points - center, axis=1)), R_R - 1e-9)
        test.assertTrue(disk_is_clear(grid, center, R_R))
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            test.assertGreaterEqual(np.linalg.norm(centers[i] - centers[j]), 2 * R_R - 1e-9)
    test.assertEqual([c.marker for c in candidates], list(range(1, len(candidates) + 1)))


class TestSeeding(unittest.TestCase):

    def test_lattice_size(self):
        grid = build_task_grid(ObjectFootprint((0.0, 0.0), 0.5), 0.01)
        self.assertEqual(len(seed_centers(grid, R_R)), 46 * 46)

    def test_tiny_grid_gives_corners(self):
        grid = build_task_grid(ObjectFootprint((0.0, 0.0), 0.01), 0.01)
        small = seed_centers(grid, 100.0)
        self.assertEqual(len(small), 4)

    def test_seeds_inside_bounds(self):
        grid = build_task_grid(ObjectFootprint((1.0, 2.0), 0.4), 0.01)
        left, right, bottom, top = grid.bounds
        seeds = seed_centers(grid, R_R)
        self.assertTrue(np.all((seeds[:, 0] >= left - 1e-9) & (seeds[:, 0] <= right + 1e-9)))
        self.assertTrue(np.all((seeds[:, 1] >= bottom - 1e-9) & (seeds[:, 1] <= top + 1e-9)))


class TestBandAndReposition(unittest.TestCase):

    def test_band_bounds(self):
        index = SpatialIndex2D([(0.0, 0.0)])
        kept = filter_by_band([(0.1, 0.0), (0.05, 0.0), (0.35, 0.0)], index, R_R)
        np.testing.assert_array_equal(kept, [[0.1, 0.0]])

    def test_band_matches_brute_force(self):
        rng = np.random.default_rng(6)
        objects = rng.uniform(-0.3, 0.3, (40, 2))
        centers = rng.uniform(-1, 1, (400, 2))
        kept = filter_by_band(centers, SpatialIndex2D(objects), R_R)
        distances = np.min(np.linalg.norm(centers[:, None] - objects[None], axis=-1), axis=1)
        expected = centers[(distances >= R_R / 2) & (distances <= 1.5 * R_R)]
        np.testing.assert_array_equal(kept, expected)

    def test_band_needs_object(self):
        with self.assertRaises(EmptyObjectIndex):
            filter_by_band([(0.0, 0.0)], SpatialIndex2D(np.zeros((0, 2))), R_R)

    def test_center_close_to_obstacle_moves_outward(self):
        moved = reposition([(0.15, 0.0)], SpatialIndex2D([(0.0, 0.0)]), R_R, EPSILON)
        self.assertEqual(len(moved), 1)
        distance = np.linalg.norm(moved[0])
        self.assertGreater(distance, 0.20)
        self.assertLessEqual(distance, 0.21)
        self.assertAlmostEqual(moved[0][1], 0.0)

    def test_clear_center_is_kept(self):
        moved = reposition([(0.5, 0.0)], SpatialIndex2D([(0.0, 0.0)]), R_R, EPSILON)
        np.testing.assert_array_equal(moved, [[0.5, 0.0]])

    def test_center_on_obstacle_or_leaving_bounds_is_dropped(self):
        index = SpatialIndex2D([(0.0, 0.0)])
        self.assertEqual(len(reposition([(0.0, 0.0)], index, R_R, EPSILON)), 0)
        self.assertEqual(len(reposition([(0.1, 0.0)], index, R_R, EPSILON, bounds=(-0.15, 0.15, -1, 1))), 0)

    def test_epsilon_must_be_positive(self):
        with self.assertRaises(ValueError):
            reposition([(0.1, 0.0)], SpatialIndex2D([(0.0, 0.0)]), R_R, 0.0)


class TestSelection(unittest.TestCase):

    def test_overlapping_center_removed(self):
        selected = select_non_overlapping([(0.0, 0.0), (0.1, 0.0), (1.0, 0.0)], R_R, first=0)
        self.assertEqual([c.center for c in selected], [(0.0, 0.0), (1.0, 0.0)])
        self.assertEqual([c.marker for c in selected], [1, 2])

    def test_single_center(self):
        selected = select_non_overlapping([(2.0, 3.0)], R_R, seed=4)
        self.assertEqual(len(selected), 1)
        self.assertEqual(selected.circles[0].marker, 1)

    def test_selection_is_maximal(self):
        centers = np.random.default_rng(12).uniform(-1, 1, (200, 2))
        for seed in range(5):
            selected = select_non_overlapping(centers, R_R, seed=seed).centers
            for center in centers:
                self.assertLess(np.min(np.linalg.norm(selected - center, axis=1)), 2 * R_R)

    def test_same_seed_same_selection(self):
        centers = np.random.default_rng(1).uniform(-1, 1, (100, 2))
        first = select_non_overlapping(centers, R_R, seed=3)
        second = select_non_overlapping(centers, R_R, seed=3)
        self.assertEqual(first.to_json(), second.to_json())


class TestGenerateCandidates(unittest.TestCase):

    def test_isolated_object(self):
        grid = object_grid()
        candidates = generate_candidates(grid, R_R, EPSILON, seed=0)
        self.assertGreater(len(candidates), 0)
        assert_valid_candidates(self, grid, candidates)

    def test_object_against_wall(self):
        xs = np.arange(-1.3, 1.3, 0.005)
        wall = np.array([(x, y) for x in xs for y in np.arange(-0.4, -0.3, 0.005)])
        grid = object_grid(obstacles=wall)
        candidates = generate_candidates(grid, R_R, EPSILON, seed=1)
        self.assertGreater(len(candidates), 0)
        assert_valid_candidates(self, grid, candidates)
        self.assertTrue(np.all(candidates.centers[:, 1] > -0.3))

    def test_enclosed_object(self):
        grid = object_grid(obstacles=ring_points(0.55))
        with self.assertRaises(NoFeasibleCandidate):
            generate_candidates(grid, R_R, EPSILON)

    def test_grid_without_object(self):
        with self.assertRaises(NoQueriedObject):
            generate_candidates(build_task_grid(ObjectFootprint((0.0, 0.0), 0.3), 0.01))

    def test_seeded_reproducibility(self):
        grid = object_grid()
        self.assertEqual(generate_candidates(grid, seed=5).to_json(), generate_candidates(grid, seed=5).to_json())

    def test_disk_must_not_cover_obstacles(self):
        grid = rasterize(object_grid(), [(0.8, 0.0)], CellState.OBSTACLE)
        self.assertFalse(disk_is_clear(grid, (0.7, 0.0), R_R))
        self.assertTrue(disk_is_clear(grid, (-0.7, 0.0), R_R))


class TestCandidateSet(unittest.TestCase):

    def test_json_round_trip_and_lookup(self):
        candidates = CandidateSet([CandidateCircle((1.0, 2.0), 0.2, 1), CandidateCircle((3.0, 4.0), 0.2, 2)],
                                  {"seed": 0})
        restored = CandidateSet.from_json(candidates.to_json())
        self.assertEqual(restored.by_marker(2).center, (3.0, 4.0))
        with self.assertRaises(KeyError):
            restored.by_marker(3)

    def test_map_centers_keeps_markers(self):
        candidates = CandidateSet([CandidateCircle((1.0, 2.0), 0.2, 7)])
        moved = candidates.map_centers(lambda centers: centers + 1.0)
        self.assertEqual(moved.circles[0].center, (2.0, 3.0))
        self.assertEqual(moved.circles[0].marker, 7)


if __name__ == "__main__":
    unittest.main()
