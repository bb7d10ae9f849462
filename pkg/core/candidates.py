"""
Candidates - robot-sized circular regions around the queried object.

Generation runs lattice seeding, distance-band filtering, obstacle-clearance
repositioning, a coverage check against the task grid, and finally a
seeded greedy non-overlap selection.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import EmptyObjectIndex, NoFeasibleCandidate, NoQueriedObject
from .spatial_index import SpatialIndex2D
from .taskgrid import CellState, TaskGrid, cells_of_state

logger = logging.getLogger(__name__)

DEFAULT_ROBOT_RADIUS = 0.2
DEFAULT_EPSILON = 0.01


@dataclass
class CandidateCircle:
    center: tuple
    radius: float = DEFAULT_ROBOT_RADIUS
    marker: int = 0
    score: Optional[float] = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("Candidate radius must be positive")
        self.center = (float(self.center[0]), float(self.center[1]))


@dataclass
class CandidateSet:
    circles: List[CandidateCircle] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.circles)

    def __iter__(self):
        return iter(self.circles)

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.circles], dtype=float).reshape(-1, 2)

    def by_marker(self, marker: int) -> CandidateCircle:
        for circle in self.circles:
            if circle.marker == marker:
                return circle
        raise KeyError(f"No candidate with marker {marker}")

    def map_centers(self, transform: Callable[[np.ndarray], np.ndarray]) -> "CandidateSet":
        """Same markers with centers passed through `transform` (N x 2 -> N x 2)"""
        if not self.circles:
            return CandidateSet([], dict(self.provenance))
        moved = transform(self.centers)
        circles = [
            CandidateCircle(tuple(moved[i]), c.radius, c.marker, c.score)
            for i, c in enumerate(self.circles)
        ]
        return CandidateSet(circles, dict(self.provenance))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "circles": [asdict(c) for c in self.circles],
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CandidateSet":
        circles = [CandidateCircle(**c) for c in data.get("circles", [])]
        return cls(circles, dict(data.get("provenance", {})))

    @classmethod
    def from_json(cls, text: str) -> "CandidateSet":
        return cls.from_dict(json.loads(text))


def seed_centers(grid: TaskGrid, r_r: float) -> np.ndarray:
    """Square lattice with spacing at most r_r/3 whose outer vertices sit on the grid edges"""
    if r_r <= 0:
        raise ValueError("Robot radius must be positive")
    left, right, bottom, top = grid.bounds
    spacing = r_r / 3.0

    def axis(low, high):
        steps = max(1, int(np.ceil((high - low) / spacing - 1e-9)))
        return np.linspace(low, high, steps + 1)

    xs, ys = np.meshgrid(axis(left, right), axis(bottom, top))
    return np.column_stack([xs.ravel(), ys.ravel()])


def filter_by_band(centers, object_index: SpatialIndex2D, r_r: float) -> np.ndarray:
    """Keep centers with r_r/2 <= distance to nearest object point <= 3 r_r/2"""
    if not len(object_index):
        raise EmptyObjectIndex("Object index is empty")
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if not len(centers):
        return centers
    distances = object_index.nearest_distances(centers)
    keep = (distances >= r_r / 2.0) & (distances <= 1.5 * r_r)
    return centers[keep]


def _inside(point, bounds) -> bool:
    left, right, bottom, top = bounds
    return left <= point[0] <= right and bottom <= point[1] <= top


def reposition(centers, obstacle_index: SpatialIndex2D, r_r: float,
               epsilon: float = DEFAULT_EPSILON, bounds=None) -> np.ndarray:
    """
    Push centers that sit within r_r of an obstacle outward along the ray from
    their nearest obstacle point until clearance lands in (r_r, r_r + epsilon].

    Centers without a reachable clear spot inside `bounds` are dropped.
    """
    if epsilon <= 0:
        raise ValueError("Epsilon must be positive")
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if not len(obstacle_index) or not len(centers):
        return centers

    if bounds is None:
        low = centers.min(axis=0) - 4 * r_r
        high = centers.max(axis=0) + 4 * r_r
        bounds = (low[0], high[0], low[1], high[1])

    kept = []
    for center in centers:
        distance, nearest_point, _ = obstacle_index.nearest(center)
        if distance > r_r:
            kept.append(center)
            continue
        if distance == 0.0:
            continue

        direction = (center - nearest_point) / distance
        # Clearance is 1-Lipschitz along the ray, so a jump of (r_r - distance)
        # cannot skip the first clear position.
        travelled = 0.0
        position = center
        while True:
            travelled += max(r_r - distance, epsilon / 2.0)
            position = center + direction * travelled
            if not _inside(position, bounds):
                position = None
                break
            distance = obstacle_index.nearest(position)[0]
            if distance > r_r:
                break
        if position is not None:
            kept.append(position)

    return np.array(kept, dtype=float).reshape(-1, 2)


def select_non_overlapping(centers, r_r: float, seed: int = 0,
                           first: Optional[int] = None) -> CandidateSet:
    """
    Greedy chain of non-overlapping circles.

    The first circle is drawn at random (or given by `first`); each next one is
    the remaining center closest to the most recently retained circle. Centers
    closer than 2 r_r to a retained circle are removed. Markers run 1..K.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    provenance = {"r_r": r_r, "seed": seed}
    if not len(centers):
        return CandidateSet([], provenance)

    rng = np.random.default_rng(seed)
    current = int(rng.integers(len(centers))) if first is None else int(first)
    pool = np.ones(len(centers), dtype=bool)
    retained: List[int] = []

    while True:
        retained.append(current)
        pool[current] = False
        overlap = np.hypot(*(centers - centers[current]).T) < 2.0 * r_r
        pool &= ~overlap
        if not pool.any():
            break
        remaining = np.flatnonzero(pool)
        distances = np.hypot(*(centers[remaining] - centers[current]).T)
        current = int(remaining[int(np.argmin(distances))])

    circles = [
        CandidateCircle(tuple(centers[index]), r_r, marker)
        for marker, index in enumerate(retained, start=1)
    ]
    return CandidateSet(circles, provenance)


def disk_is_clear(grid: TaskGrid, center: Sequence[float], r_r: float) -> bool:
    """True when every cell whose center lies within r_r holds Ground or Unseen"""
    res = grid.resolution
    low = grid.origin
    col_lo = max(int(np.floor((center[0] - r_r - low[0]) / res)), 0)
    col_hi = min(int(np.ceil((center[0] + r_r - low[0]) / res)), grid.size)
    row_lo = max(int(np.floor((center[1] - r_r - low[1]) / res)), 0)
    row_hi = min(int(np.ceil((center[1] + r_r - low[1]) / res)), grid.size)
    if col_lo >= col_hi or row_lo >= row_hi:
        return True

    rows, cols = np.mgrid[row_lo:row_hi, col_lo:col_hi]
    cell_centers = grid.cell_centers(rows.ravel(), cols.ravel())
    covered = np.hypot(*(cell_centers - np.asarray(center, dtype=float)).T) <= r_r
    window = grid.cells[row_lo:row_hi, col_lo:col_hi].ravel()[covered]
    return bool(np.all(window <= CellState.GROUND))


def generate_candidates(grid: TaskGrid, r_r: float = DEFAULT_ROBOT_RADIUS,
                        epsilon: float = DEFAULT_EPSILON, seed: int = 0) -> CandidateSet:
    """
    Full candidate pipeline over a rasterized task grid.

    Args:
        grid: Task grid with object, obstacle and ground cells written
        r_r: Robot radius (meters)
        epsilon: Clearance slack for repositioning (meters)
        seed: Seed for the first retained circle

    Returns:
        CandidateSet with markers 1..K

    Raises:
        NoQueriedObject: If the grid has no QueriedObject cell
        NoFeasibleCandidate: If every center is filtered out
    """
    object_points = cells_of_state(grid, CellState.QUERIED_OBJECT)
    if not len(object_points):
        raise NoQueriedObject("Task grid holds no queried-object cells")
    object_index = SpatialIndex2D(object_points)
    obstacle_index = SpatialIndex2D(cells_of_state(grid, CellState.OBSTACLE))

    seeds = seed_centers(grid, r_r)
    in_band = filter_by_band(seeds, object_index, r_r)
    moved = reposition(in_band, obstacle_index, r_r, epsilon, bounds=grid.bounds)

    feasible = []
    for center in moved:
        # Repositioning may drift out of the band by at most epsilon
        if object_index.nearest(center)[0] > 1.5 * r_r + epsilon:
            continue
        if disk_is_clear(grid, center, r_r):
            feasible.append(center)

    logger.debug(
        f"Candidates: {len(seeds)} seeds, {len(in_band)} in band, "
        f"{len(moved)} repositioned, {len(feasible)} feasible"
    )
    if not feasible:
        raise NoFeasibleCandidate("No candidate circle satisfies band, clearance and coverage")

    candidate_set = select_non_overlapping(feasible, r_r, seed)
    candidate_set.provenance.update({
        "epsilon": epsilon,
        "resolution": grid.resolution,
        "grid_center": [float(v) for v in grid.center],
        "seeds": len(seeds),
        "feasible": len(feasible),
    })
    return candidate_set
