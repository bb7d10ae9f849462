"""
Occupancy Map - the assumed 2D map of the scene used for path planning
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import binary_dilation, label

from core.taskgrid import CellState, ObjectFootprint, TaskGrid, build_task_grid
from .scene import Pose2D, SceneSpec, bearing_deg

DEFAULT_MAP_RESOLUTION = 0.05


@dataclass(frozen=True)
class OccupancyMap:
    """Boolean grid (True = occupied), rows along +y, anchored at `origin` (lower-left corner)"""

    occupied: np.ndarray
    resolution: float
    origin: Tuple[float, float]

    def __post_init__(self):
        occupied = np.array(self.occupied, dtype=bool)
        occupied.setflags(write=False)
        object.__setattr__(self, "occupied", occupied)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.occupied.shape

    def world_to_cell(self, point) -> Tuple[int, int]:
        col = int(math.floor((point[0] - self.origin[0]) / self.resolution))
        row = int(math.floor((point[1] - self.origin[1]) / self.resolution))
        return row, col

    def cell_center(self, row: int, col: int) -> np.ndarray:
        return np.array([
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        ])

    def cell_centers(self) -> np.ndarray:
        rows, cols = np.indices(self.shape)
        xs = self.origin[0] + (cols + 0.5) * self.resolution
        ys = self.origin[1] + (rows + 0.5) * self.resolution
        return np.stack([xs, ys], axis=-1)

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.shape[0] and 0 <= col < self.shape[1]

    def is_free(self, point) -> bool:
        row, col = self.world_to_cell(point)
        return self.in_bounds(row, col) and not self.occupied[row, col]

    def inflate(self, radius: float) -> "OccupancyMap":
        """Dilate occupied cells by a disk of `radius` meters; outside the map counts as occupied"""
        cells = int(math.ceil(radius / self.resolution))
        if cells <= 0:
            return self
        offsets = np.arange(-cells, cells + 1)
        structure = np.hypot(*np.meshgrid(offsets, offsets)) * self.resolution <= radius
        inflated = binary_dilation(self.occupied, structure=structure, border_value=1)
        return OccupancyMap(inflated, self.resolution, self.origin)

    def free_components(self) -> np.ndarray:
        """Connected-component labels of free cells (8-connectivity), 0 on occupied cells"""
        components, _ = label(~self.occupied, structure=np.ones((3, 3), dtype=bool))
        return components

    def nearest_free_cell(self, point, max_distance: float,
                          component: Optional[int] = None) -> Optional[Tuple[int, int]]:
        """Free cell whose center is closest to `point` within `max_distance`; ties by row-major order"""
        centers = self.cell_centers()
        distances = np.hypot(centers[..., 0] - point[0], centers[..., 1] - point[1])
        allowed = ~self.occupied & (distances <= max_distance)
        if component is not None:
            allowed &= self.free_components() == component
        if not allowed.any():
            return None
        masked = np.where(allowed, distances, np.inf)
        flat = int(np.argmin(masked))
        return divmod(flat, self.shape[1])


def build_occupancy_map(scene: SceneSpec, resolution: float = DEFAULT_MAP_RESOLUTION) -> OccupancyMap:
    """Rasterize the footprint of every primitive over the floor extent"""
    if resolution <= 0:
        raise ValueError("Map resolution must be positive")
    xmin, ymin, xmax, ymax = scene.floor
    cols = int(round((xmax - xmin) / resolution))
    rows = int(round((ymax - ymin) / resolution))
    grid = OccupancyMap(np.zeros((rows, cols), dtype=bool), resolution, (xmin, ymin))

    centers = grid.cell_centers().reshape(-1, 2)
    occupied = np.zeros(len(centers), dtype=bool)
    # A cell counts as occupied when the footprint overlaps its interior
    pad = resolution / 2.0 - 1e-9
    for primitive in scene.primitives:
        occupied |= primitive.footprint_contains(centers, pad=pad)
    return OccupancyMap(occupied.reshape(rows, cols), resolution, (xmin, ymin))


def ground_truth_task_grid(scene: SceneSpec, object_id: int, resolution: float = 0.01) -> TaskGrid:
    """
    Task grid rasterized straight from the scene footprints: the object's cells
    are QueriedObject, other primitives Obstacle, the remaining floor Ground.
    """
    target = scene.primitive(object_id)
    if target.shape == "cylinder":
        radius = target.radius
    else:
        radius = float(np.hypot(target.size[0], target.size[1]) / 2.0)
    grid = build_task_grid(ObjectFootprint(target.center, radius), resolution)

    rows, cols = np.indices(grid.cells.shape)
    centers = grid.cell_centers(rows.ravel(), cols.ravel())
    xmin, ymin, xmax, ymax = scene.floor
    on_floor = ((centers[:, 0] >= xmin) & (centers[:, 0] <= xmax)
                & (centers[:, 1] >= ymin) & (centers[:, 1] <= ymax))

    cells = np.where(on_floor, CellState.GROUND, CellState.UNSEEN).astype(np.int8)
    for primitive in scene.primitives:
        if primitive.object_id == object_id:
            continue
        cells[primitive.footprint_contains(centers)] = CellState.OBSTACLE
    cells[target.footprint_contains(centers)] = CellState.QUERIED_OBJECT
    return grid.with_cells(cells.reshape(grid.cells.shape))


def nearest_free_pose(scene: SceneSpec, object_id: int, free_map: OccupancyMap,
                      component: Optional[int] = None) -> Pose2D:
    """
    Free-map cell closest to the object's footprint, facing the object.
    Reference pose for objects without an operation direction.
    """
    target = scene.primitive(object_id)
    xmin, ymin, xmax, ymax = scene.floor
    reach = float(np.hypot(xmax - xmin, ymax - ymin))
    cell = free_map.nearest_free_cell(target.center, reach, component=component)
    if cell is None and component is not None:
        cell = free_map.nearest_free_cell(target.center, reach)
    if cell is None:
        return Pose2D(target.center[0], target.center[1], 0.0)
    position = free_map.cell_center(*cell)
    return Pose2D(float(position[0]), float(position[1]), bearing_deg(position, target.center))
