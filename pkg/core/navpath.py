"""
Navigation paths - grid A* on the inflated occupancy map, arc-length
midpoints and the discrete-action controller that follows a path.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from simworld.occupancy import OccupancyMap
from simworld.robot import Action, ActionConfig, RobotState, apply_action, wrap_deg
from simworld.scene import SceneSpec, bearing_deg

from .errors import GoalTooDeep, Stuck, Unreachable

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
STUCK_LIMIT = 5

# (d_row, d_col, diagonal)
MOVES = [
    (-1, 0, False), (1, 0, False), (0, -1, False), (0, 1, False),
    (-1, -1, True), (-1, 1, True), (1, -1, True), (1, 1, True),
]


@dataclass(frozen=True)
class Path:
    """Polyline of 2D waypoints (meters)"""

    waypoints: np.ndarray
    straight_moves: int = 0
    diagonal_moves: int = 0

    def __post_init__(self):
        waypoints = np.array(self.waypoints, dtype=float).reshape(-1, 2)
        if len(waypoints) == 0:
            raise ValueError("A path needs at least one waypoint")
        waypoints.setflags(write=False)
        object.__setattr__(self, "waypoints", waypoints)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def grid_cost(self, resolution: float) -> float:
        """Cost of the grid part of the path as counted by the planner"""
        return (self.straight_moves + self.diagonal_moves * SQRT2) * resolution

    def point_at(self, arc_length: float) -> np.ndarray:
        """Point at `arc_length` along the polyline, clamped to its ends"""
        lengths = self.segment_lengths
        if len(lengths) == 0 or arc_length <= 0.0:
            return self.waypoints[0].copy()
        cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
        if arc_length >= cumulative[-1]:
            return self.waypoints[-1].copy()
        segment = int(np.searchsorted(cumulative, arc_length, side="right")) - 1
        segment = min(segment, len(lengths) - 1)
        while lengths[segment] == 0.0 and segment + 1 < len(lengths):
            segment += 1
        t = (arc_length - cumulative[segment]) / lengths[segment]
        a, b = self.waypoints[segment], self.waypoints[segment + 1]
        return a + t * (b - a)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "waypoints": [[float(x), float(y)] for x, y in self.waypoints],
            "length": self.length,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Path":
        return cls(np.asarray(data["waypoints"], dtype=float))


def astar(free: np.ndarray, start: Tuple[int, int], goal: Tuple[int, int]) -> Optional[List[Tuple[int, int]]]:
    """
    8-connected A* over a boolean free mask.

    Straight moves cost 1, diagonal moves cost sqrt(2); a diagonal move is
    allowed only when both orthogonal neighbours are free. The heuristic is
    the Euclidean cell distance.

    Returns:
        Cells from start to goal inclusive, or None when no connection exists
    """
    rows, cols = free.shape
    if not (free[start] and free[goal]):
        return None

    def heuristic(cell):
        return math.hypot(cell[0] - goal[0], cell[1] - goal[1])

    g_score = np.full(free.shape, np.inf)
    came_from = np.full(free.shape, -1, dtype=np.int64)
    closed = np.zeros(free.shape, dtype=bool)
    g_score[start] = 0.0
    open_set = [(heuristic(start), 0.0, start[0], start[1])]

    while open_set:
        _, g, row, col = heapq.heappop(open_set)
        if closed[row, col]:
            continue
        if (row, col) == goal:
            break
        closed[row, col] = True
        for d_row, d_col, diagonal in MOVES:
            r, c = row + d_row, col + d_col
            if not (0 <= r < rows and 0 <= c < cols) or not free[r, c] or closed[r, c]:
                continue
            if diagonal and not (free[row, c] and free[r, col]):
                continue
            tentative = g + (SQRT2 if diagonal else 1.0)
            if tentative < g_score[r, c]:
                g_score[r, c] = tentative
                came_from[r, c] = row * cols + col
                heapq.heappush(open_set, (tentative + heuristic((r, c)), tentative, r, c))
    else:
        return None

    cells = [goal]
    while cells[-1] != start:
        cells.append(divmod(int(came_from[cells[-1]]), cols))
    return cells[::-1]


def count_moves(cells: Sequence[Tuple[int, int]]) -> Tuple[int, int]:
    """(straight, diagonal) move counts of a cell chain"""
    straight = diagonal = 0
    for (r0, c0), (r1, c1) in zip(cells, cells[1:]):
        if r0 != r1 and c0 != c1:
            diagonal += 1
        else:
            straight += 1
    return straight, diagonal


class GridPlanner:
    """
    Plans on the occupancy map inflated by the robot radius plus one cell.

    Args:
        occupancy: Raw occupancy map of the scene
        robot_radius: Robot radius r_r (meters)
        goal_search_radius: Fallback radius around a blocked goal (default 3 * r_r)
    """

    def __init__(self, occupancy: OccupancyMap, robot_radius: float = 0.2,
                 goal_search_radius: Optional[float] = None):
        self.occupancy = occupancy
        self.robot_radius = robot_radius
        self.goal_search_radius = goal_search_radius if goal_search_radius is not None else 3.0 * robot_radius
        self.free_map = occupancy.inflate(robot_radius + occupancy.resolution)
        self.components = self.free_map.free_components()

    @property
    def resolution(self) -> float:
        return self.occupancy.resolution

    def _start_cell(self, start) -> Tuple[int, int]:
        cell = self.free_map.world_to_cell(start)
        if self.free_map.in_bounds(*cell) and not self.free_map.occupied[cell]:
            return cell
        snapped = self.free_map.nearest_free_cell(start, self.robot_radius)
        if snapped is None:
            raise Unreachable(f"Start ({start[0]:.2f}, {start[1]:.2f}) is not in free space")
        return snapped

    def component_of(self, point) -> int:
        """Free-space component a position belongs to (after snapping)"""
        return int(self.components[self._start_cell(np.asarray(point, dtype=float)[:2])])

    def _goal_cell(self, goal, component: int, search_radius: float) -> Tuple[Tuple[int, int], bool]:
        """Goal cell and whether the exact goal point lies in it"""
        cell = self.free_map.world_to_cell(goal)
        if self.free_map.in_bounds(*cell) and not self.free_map.occupied[cell]:
            if self.components[cell] != component:
                raise Unreachable(f"Goal ({goal[0]:.2f}, {goal[1]:.2f}) is not connected to the start")
            return cell, True

        snapped = self.free_map.nearest_free_cell(goal, search_radius, component=component)
        if snapped is not None:
            return snapped, False
        if self.free_map.nearest_free_cell(goal, search_radius) is None:
            raise GoalTooDeep(
                f"No free cell within {search_radius:.2f} m of goal ({goal[0]:.2f}, {goal[1]:.2f})"
            )
        raise Unreachable(f"Free cells near goal ({goal[0]:.2f}, {goal[1]:.2f}) are not connected to the start")

    def plan(self, start, goal, goal_search_radius: Optional[float] = None) -> Path:
        """
        Shortest 8-connected path from start to goal.

        Args:
            start: 2D start position (meters)
            goal: 2D goal position (meters)
            goal_search_radius: Override of the blocked-goal fallback radius

        Returns:
            Path whose waypoints are start, the cell centers and the goal point

        Raises:
            Unreachable: If start and goal are not connected through free space
            GoalTooDeep: If no free cell exists near a blocked goal
        """
        start = np.asarray(start, dtype=float)[:2]
        goal = np.asarray(goal, dtype=float)[:2]
        radius = self.goal_search_radius if goal_search_radius is None else goal_search_radius

        start_cell = self._start_cell(start)
        goal_cell, exact_goal = self._goal_cell(goal, int(self.components[start_cell]), radius)

        cells = astar(~self.free_map.occupied, start_cell, goal_cell)
        if cells is None:
            raise Unreachable(f"No free connection from {start_cell} to {goal_cell}")

        centers = [self.free_map.cell_center(r, c) for r, c in cells]
        waypoints = [start] + centers
        if exact_goal:
            waypoints.append(goal)
        straight, diagonal = count_moves(cells)
        path = Path(np.array(waypoints), straight, diagonal)
        logger.debug(f"Planned {len(cells)} cells, length {path.length:.3f} m, exact goal: {exact_goal}")
        return path


def plan_path(occupancy: OccupancyMap, start, goal, robot_radius: float = 0.2,
              goal_search_radius: Optional[float] = None) -> Path:
    """One-off planning; see GridPlanner.plan"""
    return GridPlanner(occupancy, robot_radius, goal_search_radius).plan(start, goal)


def path_midpoint(path: Path) -> np.ndarray:
    return path.point_at(path.length / 2.0)


def rotate_to_face(state: RobotState, target, turn_deg: float = 1.0) -> List[Action]:
    """Shorter sequence of turns aligning the heading with the bearing to `target`"""
    offset = wrap_deg(bearing_deg(state.position, target) - state.heading_deg)
    turns = int(round(abs(offset) / turn_deg))
    return [Action.TURN_LEFT if offset > 0 else Action.TURN_RIGHT] * turns


@dataclass
class FollowResult:
    state: RobotState
    actions: List[Action] = field(default_factory=list)
    traveled: float = 0.0
    collisions: int = 0


def execute(scene: SceneSpec, state: RobotState, actions: Sequence[Action],
            config: ActionConfig = ActionConfig()) -> RobotState:
    for action in actions:
        state = apply_action(scene, state, action, config)
    return state


def follow_path(scene: SceneSpec, state: RobotState, path: Path, stop_at: Optional[float] = None,
                config: ActionConfig = ActionConfig()) -> FollowResult:
    """
    Greedy controller: aim at the path point one forward step further along
    the arc, step forward, repeat until `stop_at` (default: the whole path).

    Raises:
        Stuck: After STUCK_LIMIT consecutive colliding forward steps; carries the partial result
    """
    stop_at = path.length if stop_at is None else min(max(stop_at, 0.0), path.length)
    result = FollowResult(state)
    if stop_at <= 0.0:
        return result

    step = config.forward_step
    count = int(math.floor(stop_at / step + 1e-9))
    arcs = [k * step for k in range(1, count + 1)]
    if stop_at - count * step > 1e-9:
        arcs.append(stop_at)

    consecutive = 0
    for arc in arcs:
        target = path.point_at(arc)
        distance = float(np.linalg.norm(target - result.state.position))
        while distance >= step / 2.0:
            turns = rotate_to_face(result.state, target, config.turn_deg)
            result.state = execute(scene, result.state, turns, config)
            result.actions.extend(turns)

            result.state = apply_action(scene, result.state, Action.MOVE_FORWARD, config)
            result.actions.append(Action.MOVE_FORWARD)
            if result.state.collided:
                consecutive += 1
                result.collisions += 1
                if consecutive >= STUCK_LIMIT:
                    raise Stuck(
                        f"Blocked {consecutive} times at ({result.state.x:.2f}, {result.state.y:.2f})",
                        partial=result,
                    )
                continue
            consecutive = 0
            result.traveled += step
            remaining = float(np.linalg.norm(target - result.state.position))
            # Overshooting a target closer than one step
            if remaining >= distance - 1e-9:
                break
            distance = remaining
    return result


class Navigator:
    """
    Moves a robot through a scene: plan on the map, follow with discrete actions.

    Args:
        scene: Scene the robot acts in
        planner: Planner over the scene's occupancy map
        config: Discrete action parameters
    """

    def __init__(self, scene: SceneSpec, planner: GridPlanner, config: ActionConfig = ActionConfig()):
        self.scene = scene
        self.planner = planner
        self.config = config

    def go_to(self, state: RobotState, goal, fraction: float = 1.0,
              goal_search_radius: Optional[float] = None) -> Tuple[Path, FollowResult]:
        """Plan to `goal` and follow the first `fraction` of the path's arc length"""
        path = self.planner.plan(state.position, goal, goal_search_radius)
        return path, follow_path(self.scene, state, path, fraction * path.length, self.config)

    def face(self, state: RobotState, target) -> Tuple[RobotState, List[Action]]:
        if np.linalg.norm(np.asarray(target, dtype=float)[:2] - state.position) < 1e-9:
            return state, []
        actions = rotate_to_face(state, np.asarray(target, dtype=float)[:2], self.config.turn_deg)
        return execute(self.scene, state, actions, self.config), actions

    def look(self, state: RobotState, pitch_deg: float) -> Tuple[RobotState, List[Action]]:
        """Look up/down in whole look steps toward an absolute pitch"""
        steps = int(round((pitch_deg - state.pitch_deg) / self.config.look_deg))
        actions = [Action.LOOK_UP if steps > 0 else Action.LOOK_DOWN] * abs(steps)
        return execute(self.scene, state, actions, self.config), actions
