"""
Task Grid - square priority grid around the queried object.

Cells hold one of four states. Writing a point keeps the higher-priority
state: QueriedObject > Obstacle > Ground > Unseen.
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import EmptyObject

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 0.01
GRID_MARGIN = 1.0


class CellState(IntEnum):
    """Values are priority ranks, so numpy max implements the overwrite rule"""

    UNSEEN = 0
    GROUND = 1
    OBSTACLE = 2
    QUERIED_OBJECT = 3

    @property
    def symbol(self) -> str:
        return {0: "∅", 1: "1", 2: "0", 3: "2"}[int(self)]


@dataclass(frozen=True)
class ObjectFootprint:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("Footprint radius must be positive")
        object.__setattr__(self, "center", np.array(self.center, dtype=float).reshape(2))


def _circle_from_two(a, b):
    center = (a + b) / 2.0
    return center, float(np.hypot(*(a - center)))


def _circle_from_three(a, b, c):
    ax, ay = a
    bx, by = b
    cx, cy = c
    det = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(det) < 1e-14:
        # Collinear: the circle over the farthest pair
        pairs = [(a, b), (a, c), (b, c)]
        far = max(pairs, key=lambda pair: np.hypot(*(pair[0] - pair[1])))
        return _circle_from_two(*far)
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / det
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / det
    center = np.array([ux, uy])
    return center, float(np.hypot(*(a - center)))


def _minimal_enclosing_circle(points: np.ndarray):
    """Incremental Welzl construction over a fixed shuffle"""
    rng = np.random.default_rng(0)
    points = points[rng.permutation(len(points))]
    eps = 1e-12

    def outside(p, center, radius):
        return np.hypot(*(p - center)) > radius + eps

    center, radius = points[0].copy(), 0.0
    for i in range(1, len(points)):
        if not outside(points[i], center, radius):
            continue
        center, radius = points[i].copy(), 0.0
        for j in range(i):
            if not outside(points[j], center, radius):
                continue
            center, radius = _circle_from_two(points[i], points[j])
            for k in range(j):
                if outside(points[k], center, radius):
                    center, radius = _circle_from_three(points[i], points[j], points[k])
    return center, radius


def object_footprint(object_points, min_radius: float = DEFAULT_RESOLUTION) -> ObjectFootprint:
    """
    Minimal enclosing circle of the object's ground projection.

    Args:
        object_points: 2D points of the queried object
        min_radius: Floor for the radius (single-point objects)

    Returns:
        ObjectFootprint: center and radius of the smallest enclosing circle

    Raises:
        EmptyObject: If no points are given
    """
    points = np.asarray(object_points, dtype=float).reshape(-1, 2)
    if not len(points):
        raise EmptyObject("Queried object has no projected points")

    points = np.unique(points, axis=0)
    if len(points) >= 3:
        try:
            points = points[ConvexHull(points).vertices]
        except QhullError:
            pass

    center, radius = _minimal_enclosing_circle(points)
    return ObjectFootprint(center, max(radius, min_radius))


@dataclass(frozen=True)
class TaskGrid:
    """Square grid centered on the object; rows run along +y, columns along +x"""

    center: np.ndarray
    half_extent: float
    resolution: float
    cells: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.array(self.center, dtype=float).reshape(2))
        cells = np.array(self.cells, dtype=np.int8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def size(self) -> int:
        return self.cells.shape[0]

    @property
    def origin(self) -> np.ndarray:
        """Lower-left corner in meters"""
        return self.center - self.half_extent

    @property
    def bounds(self):
        low = self.origin
        return low[0], low[0] + self.size * self.resolution, low[1], low[1] + self.size * self.resolution

    def cell_index(self, points) -> np.ndarray:
        """
        Row/column of each point; -1 marks points outside the grid.

        A point on a shared cell edge belongs to the cell with the smaller index.
        """
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        scaled = (points - self.origin) / self.resolution
        index = np.ceil(scaled) - 1
        index[scaled == 0] = 0
        index = index.astype(int)
        inside = np.all((scaled >= 0) & (scaled <= self.size), axis=1)
        rows = np.where(inside, index[:, 1], -1)
        cols = np.where(inside, index[:, 0], -1)
        return np.column_stack([rows, cols])

    def cell_centers(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        low = self.origin
        return np.column_stack([
            low[0] + (np.asarray(cols) + 0.5) * self.resolution,
            low[1] + (np.asarray(rows) + 0.5) * self.resolution,
        ])

    def counts(self) -> Dict[CellState, int]:
        return {state: int(np.count_nonzero(self.cells == state)) for state in CellState}

    def with_cells(self, cells: np.ndarray) -> "TaskGrid":
        return TaskGrid(self.center, self.half_extent, self.resolution, cells)


def build_task_grid(footprint: ObjectFootprint, resolution: float = DEFAULT_RESOLUTION) -> TaskGrid:
    """Grid centered on the footprint with half-extent radius + 1 m, every cell Unseen"""
    if resolution <= 0:
        raise ValueError("Grid resolution must be positive")
    half_extent = footprint.radius + GRID_MARGIN
    size = int(round(2.0 * half_extent / resolution))
    half_extent = size * resolution / 2.0
    cells = np.full((size, size), CellState.UNSEEN, dtype=np.int8)
    logger.debug(f"Task grid {size}x{size} at {footprint.center} (radius {footprint.radius:.3f} m)")
    return TaskGrid(footprint.center, half_extent, resolution, cells)


def rasterize(grid: TaskGrid, points, state: CellState) -> TaskGrid:
    """Write points into a copy of the grid, keeping max(current, state) per cell"""
    if state == CellState.UNSEEN:
        raise ValueError("Cannot rasterize points as Unseen")
    index = grid.cell_index(points)
    index = index[index[:, 0] >= 0]
    cells = grid.cells.copy()
    np.maximum.at(cells, (index[:, 0], index[:, 1]), np.int8(state))
    return grid.with_cells(cells)


def cells_of_state(grid: TaskGrid, state: CellState) -> np.ndarray:
    """Centers of all cells in `state`, row-major"""
    rows, cols = np.nonzero(grid.cells == state)
    return grid.cell_centers(rows, cols)
