"""
Episode pipeline - target-scene identification, object localization,
task-space reconstruction and the sequential decision, run end to end on
the simulated robot, plus the ablation modes.
"""

import base64
import json
import logging
import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from simworld.camera import Frame, Intrinsics, capture_frame, scene_image_set
from simworld.occupancy import build_occupancy_map, nearest_free_pose
from simworld.robot import (PITCH_LIMIT_DEG, Action, ActionConfig, RobotState, apply_action,
                            exploration_poses, sweep_actions, sweep_capture, wrap_deg)
from simworld.scene import Pose2D, SceneSpec, bearing_deg, optimal_operation_pose

from .candidates import CandidateSet, generate_candidates
from .config_loader import Mode, PipelineConfig, SimulationConfig
from .errors import (DegenerateCloud, GoalTooDeep, MalformedTrace, NavigationError, NoFeasibleCandidate,
                     NoOperationDirection, NoVisibleCandidates, SegmentNotFound, Stuck, Unreachable)
from .geometry import OBJECT_LABEL, OTHER_LABEL, GroundFrame, PointCloud, fit_ground_plane
from .metrics import EpisodeResult, compute_dtg, is_success
from .navpath import FollowResult, GridPlanner, Navigator, Path, follow_path
from .scorer_interface import ScorerInterface
from .scoring import (MarkerPlacement, ScoringContext, TaskQuery, identify_target_scene,
                      locate_object_in_frame, object_views, project_markers, score_candidates)
from .taskgrid import CellState, TaskGrid, build_task_grid, object_footprint, rasterize

logger = logging.getLogger(__name__)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Mode):
        return value.value
    return value


def grid_snapshot(grid: TaskGrid) -> Dict[str, Any]:
    """Compact JSON form of a task grid (zlib-compressed cells, base64)"""
    return {
        "center": [float(v) for v in grid.center],
        "half_extent": float(grid.half_extent),
        "resolution": float(grid.resolution),
        "size": grid.size,
        "cells": base64.b64encode(zlib.compress(grid.cells.tobytes(), 9)).decode("ascii"),
    }


def grid_from_snapshot(snapshot: Dict[str, Any]) -> TaskGrid:
    try:
        raw = zlib.decompress(base64.b64decode(snapshot["cells"]))
        size = int(snapshot["size"])
        cells = np.frombuffer(raw, dtype=np.int8).reshape(size, size)
        return TaskGrid(snapshot["center"], snapshot["half_extent"], snapshot["resolution"], cells)
    except (KeyError, ValueError, TypeError, zlib.error) as e:
        raise MalformedTrace(f"Unreadable grid snapshot: {e}")


@dataclass
class EpisodeTrace:
    """Append-only record of one episode"""

    scene: str
    query: Dict[str, str]
    mode: str
    seed: int
    events: List[Dict[str, Any]] = field(default_factory=list)
    actions: List[str] = field(default_factory=list)
    collisions: int = 0

    def record(self, stage: str, **data) -> None:
        self.events.append(_jsonable({"stage": stage, **data}))

    def add_actions(self, actions: Sequence[Action], collisions: int = 0) -> None:
        self.actions.extend(action.value for action in actions)
        self.collisions += collisions

    def events_of(self, stage: str) -> List[Dict[str, Any]]:
        return [event for event in self.events if event["stage"] == stage]

    def last(self, stage: str) -> Optional[Dict[str, Any]]:
        events = self.events_of(stage)
        return events[-1] if events else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scene": self.scene,
            "query": self.query,
            "mode": self.mode,
            "seed": self.seed,
            "events": self.events,
            "actions": self.actions,
            "collisions": self.collisions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EpisodeTrace":
        try:
            trace = cls(data["scene"], dict(data["query"]), data["mode"], int(data["seed"]),
                        list(data["events"]), list(data["actions"]), int(data.get("collisions", 0)))
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedTrace(f"Not an episode trace: {e}")
        if any(not isinstance(event, dict) or "stage" not in event for event in trace.events):
            raise MalformedTrace("Trace events must be objects with a 'stage'")
        if any(action not in {a.value for a in Action} for action in trace.actions):
            raise MalformedTrace("Trace holds an unknown action")
        return trace

    @classmethod
    def load_jsonl(cls, path: str) -> List["EpisodeTrace"]:
        """
        Raises:
            MalformedTrace: If a line is not a trace
        """
        traces = []
        with open(path, "r", encoding="utf-8") as file:
            for number, line in enumerate(file, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as e:
                    raise MalformedTrace(f"{path}:{number}: {e}")
                traces.append(cls.from_dict(data))
        if not traces:
            raise MalformedTrace(f"{path} holds no traces")
        return traces


def scene_target_id(scene: SceneSpec) -> int:
    """Ground-truth object the scene is about"""
    target_id = scene.metadata.get("target_id")
    if target_id is not None:
        return int(target_id)
    if scene.task is not None:
        matches = scene.objects_with_label(scene.task.label)
        if matches:
            return matches[0].object_id
    raise ValueError(f"Scene {scene.name} declares no target object")


def _in_image(frame: Frame, placement: MarkerPlacement) -> bool:
    """Marker projects in front of the camera and inside the image, occluded or not"""
    pixel = np.nan_to_num(np.asarray([placement.pixel]), nan=-1.0, posinf=-1.0, neginf=-1.0)
    return placement.depth > 1e-6 and bool(frame.in_bounds(pixel)[0])


class EpisodeRunner:
    """
    Runs one episode on its own robot state and trace.

    Args:
        scene: Scene (shared, read-only)
        query: Task query
        scorer: Scorer consulted at every decision
        cfg: Pipeline settings, including the mode
        sim: Robot and camera settings
        state: Initial robot state (default: the scene's start pose)
    """

    def __init__(self, scene: SceneSpec, query: TaskQuery, scorer: ScorerInterface,
                 cfg: PipelineConfig = PipelineConfig(), sim: SimulationConfig = SimulationConfig(),
                 state: Optional[RobotState] = None):
        self.scene = scene
        self.query = query
        self.scorer = scorer
        self.cfg = cfg
        self.sim = sim
        self.action_config = ActionConfig(sim.forward_step, sim.turn_deg, sim.look_deg, cfg.robot_radius)
        self.intrinsics = Intrinsics.from_fov(sim.image_width, sim.image_height, sim.hfov_deg)
        self.planner = GridPlanner(build_occupancy_map(scene, sim.map_resolution), cfg.robot_radius,
                                   cfg.goal_search_factor * cfg.robot_radius)
        self.navigator = Navigator(scene, self.planner, self.action_config)
        self.context = ScoringContext(query, scene, cfg.seed)
        self.trace = EpisodeTrace(scene.name, query.to_dict(), cfg.mode.value, cfg.seed)
        self.state = state or RobotState(scene.start.x, scene.start.y, scene.start.heading_deg,
                                         0.0, sim.camera_height)
        self.traveled = 0.0
        self._captures = 0
        self.exploration_frames: List[Frame] = []

    # Motion bookkeeping

    def _absorb(self, follow: FollowResult) -> None:
        self.state = follow.state
        self.traveled += follow.traveled
        self.trace.add_actions(follow.actions, follow.collisions)

    def _apply(self, actions: Sequence[Action]) -> None:
        for action in actions:
            self.state = apply_action(self.scene, self.state, action, self.action_config)
        self.trace.add_actions(actions)

    def _pose(self) -> List[float]:
        return [self.state.x, self.state.y, self.state.heading_deg]

    def move(self, goal, fraction: float = 1.0, label: str = "",
             goal_search_radius: Optional[float] = None) -> Path:
        """Plan to `goal` and follow `fraction` of the path"""
        path = self.planner.plan(self.state.position, goal, goal_search_radius)
        stop_at = fraction * path.length
        try:
            follow = follow_path(self.scene, self.state, path, stop_at, self.action_config)
        except Stuck as e:
            self._absorb(e.partial)
            self.trace.record("navigate", label=label, goal=goal, path=path.to_dict(), stop_at=stop_at,
                              traveled=e.partial.traveled, end=self._pose(), stuck=True)
            raise
        self._absorb(follow)
        self.trace.record("navigate", label=label, goal=goal, path=path.to_dict(), stop_at=stop_at,
                          traveled=follow.traveled, end=self._pose())
        return path

    def face(self, target) -> None:
        state, actions = self.navigator.face(self.state, target)
        self.state = state
        self.trace.add_actions(actions)

    def capture(self, pitch_deg: float) -> Frame:
        """Tilt to `pitch_deg`, capture, tilt back to level"""
        self.state, down = self.navigator.look(self.state, pitch_deg)
        self.trace.add_actions(down)
        self._captures += 1
        frame = capture_frame(self.scene, self.state.camera_pose(), self.intrinsics, self._captures)
        self.state, up = self.navigator.look(self.state, 0.0)
        self.trace.add_actions(up)
        return frame

    # Stages

    def identify_target_scene(self) -> Frame:
        component = self.planner.component_of(self.state.position)
        poses = exploration_poses(self.scene, self.planner.free_map, self.sim.exploration_spacing,
                                  self.sim.exploration_headings, self.sim.exploration_pitch_deg, component)
        frames = scene_image_set(self.scene, poses, self.intrinsics, self.sim.camera_height)
        self.exploration_frames = frames
        index, goal, decision = identify_target_scene(frames, self.context, self.scorer)
        self.trace.record("identify", images=len(frames), chosen=index, capture_pose=poses[index - 1],
                          goal=goal, decision=decision.to_dict())
        self.move(goal, label="target-scene")
        return frames[index - 1]

    def localize(self, frame: Frame) -> Tuple[PointCloud, int, np.ndarray]:
        """Object points in `frame` and their ground centroid"""
        cloud, segment, decision = locate_object_in_frame(frame, self.context, self.scorer)
        estimate = cloud.points[:, :2].mean(axis=0)
        self.trace.record("localize", image=frame.index, segment=segment, points=len(cloud),
                          estimate=estimate, decision=decision.to_dict())
        return cloud, segment, estimate

    def gather_views(self, segment: int) -> PointCloud:
        """The localized object as seen across every exploration capture"""
        cloud, seen = object_views(self.exploration_frames, segment)
        self.trace.record("views", segment=segment, images=seen, points=len(cloud))
        return cloud

    def sweep(self, estimate: np.ndarray) -> PointCloud:
        """Sweep captures fused into one cloud; object pixels labelled per capture"""
        frames = sweep_capture(self.scene, self.state, estimate, self.cfg.alpha0_deg, self.cfg.alpha1_deg,
                               self.intrinsics)
        self._apply(sweep_actions(self.cfg.alpha0_deg, self.cfg.alpha1_deg, self.action_config))

        clouds, located = [], []
        for frame in frames:
            try:
                _, segment, _ = locate_object_in_frame(frame, self.context, self.scorer)
                clouds.append(frame.point_cloud([segment]))
                located.append(frame.index)
            except SegmentNotFound:
                clouds.append(frame.point_cloud())
        cloud = PointCloud.concatenate(clouds)
        object_points = len(cloud.select(OBJECT_LABEL))
        self.trace.record("sweep", captures=len(frames), located_in=located, points=len(cloud),
                          object_points=object_points)
        if object_points == 0:
            raise SegmentNotFound(f"'{self.query.label}' not found in any sweep capture")
        return cloud

    def reconstruct_task_space(self, cloud: PointCloud) -> Tuple[CandidateSet, np.ndarray]:
        """
        Ground plane, task grid and candidate circles from a labelled cloud.

        Returns:
            (candidates in world coordinates, object footprint center in world coordinates)
        """
        starved = self.cfg.mode == Mode.NORTS
        try:
            plane = fit_ground_plane(cloud, self.cfg.ransac_iterations, self.cfg.inlier_tol, self.cfg.seed,
                                     self.cfg.max_tilt_deg)
        except DegenerateCloud as e:
            if starved:
                raise NoFeasibleCandidate(f"No ground plane in a single image: {e}")
            raise
        frame = GroundFrame.from_plane(plane)
        self.trace.record("ground", normal=plane.normal, d=plane.d, inliers=plane.inlier_count)

        inlier = np.zeros(len(cloud), dtype=bool)
        inlier[plane.inlier_indices] = True
        is_object = cloud.labels == OBJECT_LABEL
        heights = frame.height(cloud.points)
        ground = frame.to_2d(cloud.points[inlier & ~is_object])
        obstacles = frame.to_2d(cloud.points[~inlier & ~is_object & (heights > self.cfg.obstacle_min_height)])
        object_2d = frame.to_2d(cloud.points[is_object])

        footprint = object_footprint(object_2d, self.cfg.grid_resolution)
        grid = build_task_grid(footprint, self.cfg.grid_resolution)
        grid = rasterize(grid, ground, CellState.GROUND)
        grid = rasterize(grid, obstacles, CellState.OBSTACLE)
        grid = rasterize(grid, object_2d, CellState.QUERIED_OBJECT)
        counts = {state.name: count for state, count in grid.counts().items()}
        self.trace.record("grid", grid=grid_snapshot(grid), counts=counts,
                          footprint={"center": footprint.center, "radius": footprint.radius})
        if starved and counts["GROUND"] == 0:
            raise NoFeasibleCandidate("No ground cell visible around the object")

        local = generate_candidates(grid, self.cfg.robot_radius, self.cfg.epsilon, self.cfg.seed)
        candidates = local.map_centers(lambda centers: frame.to_3d(centers)[:, :2])
        center = frame.to_3d(footprint.center)[0, :2]
        self.trace.record("candidates", candidates=candidates.to_dict(), object_center=center)
        return candidates, center

    def decide(self, candidates: CandidateSet, step: int, keep_in_view: Optional[int] = None) -> int:
        """
        One scoring from the current viewpoint; nearest candidate when nothing is visible.

        With `keep_in_view`, the camera tilts down in look steps until that
        marker projects into the image. A marker still below or beside the
        image at the pitch limit stays the choice without re-scoring.
        """
        pitch = self.cfg.decision_pitch_deg
        frame = self.capture(pitch)
        overlay = project_markers(frame, candidates, self.scene)
        if keep_in_view is not None:
            while (not _in_image(frame, overlay.placement(keep_in_view))
                   and pitch - self.action_config.look_deg >= -PITCH_LIMIT_DEG):
                pitch -= self.action_config.look_deg
                frame = self.capture(pitch)
                overlay = project_markers(frame, candidates, self.scene)
            if not _in_image(frame, overlay.placement(keep_in_view)):
                self.trace.record("decision", step=step, pitch=pitch, overlay=overlay.to_dict(), chosen=keep_in_view,
                                  fallback=False, retained=True)
                logger.info(f"Marker {keep_in_view} out of view at step {step}, keeping it")
                return keep_in_view

        try:
            decision = score_candidates(frame, overlay, candidates, self.context, self.scorer)
            chosen = decision.chosen
            self.trace.record("decision", step=step, pitch=pitch, overlay=overlay.to_dict(),
                              decision=decision.to_dict(), chosen=chosen, fallback=False)
        except NoVisibleCandidates:
            distances = np.linalg.norm(candidates.centers - self.state.position, axis=1)
            chosen = candidates.circles[int(np.argmin(distances))].marker
            self.trace.record("decision", step=step, pitch=pitch, overlay=overlay.to_dict(), chosen=chosen,
                              fallback=True)
            logger.info(f"No visible candidate at step {step}, falling back to nearest marker {chosen}")
        return chosen

    def sequential_decision(self, candidates: CandidateSet, object_center) -> np.ndarray:
        """
        Score, go halfway, face the object, re-score all candidates, go to the
        new choice. One-step mode goes straight to the first choice.
        """
        if len(candidates) == 0:
            raise ValueError("Sequential decision needs candidates")
        first = self.decide(candidates, step=1)
        goal = np.asarray(candidates.by_marker(first).center)
        if self.cfg.mode == Mode.OGD:
            self.move(goal, label="decision-1")
            return goal

        self.move(goal, fraction=0.5, label="decision-1-midpoint")
        self.face(object_center)
        second = self.decide(candidates, step=2, keep_in_view=first)
        goal = np.asarray(candidates.by_marker(second).center)
        self.move(goal, label="decision-2")
        return goal

    def direct_to_object(self, object_cloud: PointCloud) -> np.ndarray:
        """Straight to the free cell nearest the object, no candidates"""
        footprint = object_footprint(object_cloud.points[:, :2], self.cfg.grid_resolution)
        radius = footprint.radius + self.cfg.goal_search_factor * self.cfg.robot_radius
        self.move(footprint.center, label="direct", goal_search_radius=radius)
        return np.asarray(footprint.center)

    def run_stages(self) -> None:
        frame = self.identify_target_scene()
        object_cloud, segment, estimate = self.localize(frame)
        self.face(estimate)

        if self.cfg.mode == Mode.DNT:
            center = self.direct_to_object(PointCloud.concatenate([object_cloud, self.gather_views(segment)]))
        else:
            if self.cfg.mode == Mode.NORTS:
                cloud = frame.point_cloud([segment])
            else:
                cloud = PointCloud.concatenate([self.sweep(estimate), self.gather_views(segment)])
            candidates, center = self.reconstruct_task_space(cloud)
            self.sequential_decision(candidates, center)

        self.face(center)
        self.trace.add_actions([Action.STOP])
        self.trace.record("final", pose=self._pose())

    def run(self) -> EpisodeResult:
        """Run every stage; a failing stage ends the episode where the robot stands"""
        target_id = scene_target_id(self.scene)
        target = self.scene.primitive(target_id)
        optimal, reference = self.reference_pose(target_id)
        start = self.state
        shortest = self.shortest_path_length(optimal)
        self.trace.record("setup", start=[start.x, start.y, start.heading_deg], optimal_pose=optimal.to_dict(),
                          reference=reference, shortest_path=shortest, action_config=asdict(self.action_config),
                          pipeline=self.cfg.model_dump(mode="json"))
        logger.info(f"Episode {self.scene.name} / '{self.query.text}' / {self.cfg.mode.value} / seed {self.cfg.seed}")

        failure = None
        try:
            self.run_stages()
        except NavigationError as e:
            failure = e.code
            self.trace.record("failure", reason=e.code, message=str(e), pose=self._pose())
            logger.info(f"Episode failed with {e.code}: {e}")
        except Exception as e:
            failure = type(e).__name__
            self.trace.record("failure", reason=failure, message=str(e), pose=self._pose())
            logger.exception(f"Episode crashed in a stage: {e}")

        dtg = compute_dtg(self.state.position, optimal.position)
        heading_error = abs(wrap_deg(bearing_deg(self.state.position, target.center) - self.state.heading_deg))
        return EpisodeResult(
            scene=self.scene.name,
            query=self.query.text,
            mode=self.cfg.mode.value,
            seed=self.cfg.seed,
            success=is_success(dtg, self.cfg.success_threshold),
            shortest_path=shortest,
            traveled=self.traveled,
            dtg=dtg,
            final_pose=(self.state.x, self.state.y, self.state.heading_deg),
            heading_error_deg=heading_error,
            failure_reason=failure,
            trace=self.trace,
        )

    def reference_pose(self, target_id: int) -> Tuple[Pose2D, str]:
        """
        Pose the episode is scored against, and how it was obtained.

        Objects without an operation direction are scored against the free
        pose nearest their footprint, reachable from the start when possible.
        """
        try:
            return optimal_operation_pose(self.scene, target_id, self.cfg.robot_radius), "operation-direction"
        except NoOperationDirection as e:
            try:
                component = self.planner.component_of(self.state.position)
            except Unreachable:
                component = None
            pose = nearest_free_pose(self.scene, target_id, self.planner.free_map, component)
            logger.info(f"{e}; scoring against the nearest free pose ({pose.x:.2f}, {pose.y:.2f})")
            return pose, "nearest-free"

    def shortest_path_length(self, optimal: Pose2D) -> float:
        """Planner distance from the start to the optimal operation position"""
        try:
            path = self.planner.plan(self.state.position, optimal.position)
        except (Unreachable, GoalTooDeep):
            return compute_dtg(self.state.position, optimal.position)
        return path.length + float(np.linalg.norm(path.end - optimal.position))


def run_episode(scene: SceneSpec, query: TaskQuery, scorer: ScorerInterface,
                cfg: PipelineConfig = PipelineConfig(), sim: SimulationConfig = SimulationConfig()) -> EpisodeResult:
    """Run one episode in the mode set in `cfg`; stage failures are recorded, not raised"""
    return EpisodeRunner(scene, query, scorer, cfg, sim).run()


def run_ablation(scene: SceneSpec, query: TaskQuery, scorer: ScorerInterface,
                 cfg: PipelineConfig = PipelineConfig(), mode: Optional[Mode] = None,
                 sim: SimulationConfig = SimulationConfig()) -> EpisodeResult:
    """Run one episode with `mode` (default: the mode in `cfg`)"""
    if mode is not None:
        cfg = cfg.model_copy(update={"mode": Mode.parse(mode)})
    return run_episode(scene, query, scorer, cfg, sim)


def sequential_decision(scene: SceneSpec, state: RobotState, candidates: CandidateSet,
                        scorer: ScorerInterface, query: TaskQuery, object_center,
                        cfg: PipelineConfig = PipelineConfig(),
                        sim: SimulationConfig = SimulationConfig()) -> Tuple[np.ndarray, EpisodeRunner]:
    """
    Two-step (or one-step in OGD mode) decision from `state`.

    Returns:
        (chosen candidate center, runner holding the final state and trace)
    """
    runner = EpisodeRunner(scene, query, scorer, cfg, sim, state=state)
    chosen = runner.sequential_decision(candidates, object_center)
    runner.face(object_center)
    return chosen, runner


def replay_actions(scene: SceneSpec, trace: EpisodeTrace, camera_height: float = 1.5) -> RobotState:
    """Re-apply a trace's actions from the scene's start pose"""
    setup = trace.last("setup")
    if setup is None:
        raise MalformedTrace("Trace has no setup event")
    config = ActionConfig(**setup["action_config"])
    x, y, heading = setup["start"]
    state = RobotState(x, y, heading, 0.0, camera_height)
    for action in trace.actions:
        state = apply_action(scene, state, Action(action), config)
    return state
