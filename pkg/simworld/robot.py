"""
Robot - disc robot embodiment: state, discrete actions, the sweep capture
and the exploration capture poses.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .camera import CAMERA_HEIGHT, Frame, Intrinsics, camera_pose, capture_frame
from .occupancy import OccupancyMap
from .scene import SceneSpec, bearing_deg

PITCH_LIMIT_DEG = 80.0


def wrap_deg(angle: float) -> float:
    """Map an angle to [-180, 180)"""
    if -180.0 <= angle < 180.0:
        return angle
    return angle - 360.0 * math.floor((angle + 180.0) / 360.0)


class Action(str, Enum):
    STOP = "stop"
    MOVE_FORWARD = "move_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    LOOK_UP = "look_up"
    LOOK_DOWN = "look_down"


@dataclass(frozen=True)
class ActionConfig:
    forward_step: float = 0.1
    turn_deg: float = 1.0
    look_deg: float = 30.0
    robot_radius: float = 0.2


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading_deg: float = 0.0
    pitch_deg: float = 0.0
    camera_height: float = CAMERA_HEIGHT
    collided: bool = False

    def __post_init__(self):
        object.__setattr__(self, "heading_deg", wrap_deg(float(self.heading_deg)))
        pitch = max(-PITCH_LIMIT_DEG, min(PITCH_LIMIT_DEG, float(self.pitch_deg)))
        object.__setattr__(self, "pitch_deg", pitch)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def heading(self) -> float:
        return math.radians(self.heading_deg)

    def camera_pose(self):
        return camera_pose(self.x, self.y, self.heading_deg, self.pitch_deg, self.camera_height)


def apply_action(scene: SceneSpec, state: RobotState, action: Action,
                 config: ActionConfig = ActionConfig()) -> RobotState:
    """
    Advance the robot by one discrete action.

    A forward step whose disc would overlap a primitive or leave the floor
    is a no-op with `collided` set.
    """
    if action == Action.MOVE_FORWARD:
        x = state.x + config.forward_step * math.cos(state.heading)
        y = state.y + config.forward_step * math.sin(state.heading)
        if scene.collides((x, y), config.robot_radius):
            return replace(state, collided=True)
        return replace(state, x=x, y=y, collided=False)
    if action == Action.TURN_LEFT:
        return replace(state, heading_deg=state.heading_deg + config.turn_deg, collided=False)
    if action == Action.TURN_RIGHT:
        return replace(state, heading_deg=state.heading_deg - config.turn_deg, collided=False)
    if action == Action.LOOK_UP:
        return replace(state, pitch_deg=state.pitch_deg + config.look_deg, collided=False)
    if action == Action.LOOK_DOWN:
        return replace(state, pitch_deg=state.pitch_deg - config.look_deg, collided=False)
    return replace(state, collided=False)


def sweep_offsets(alpha0: float = 30.0, alpha1: float = 60.0) -> List[Tuple[float, float]]:
    """(yaw offset, absolute pitch) of each sweep capture: left/center/right, level then tilted down"""
    return [(yaw, pitch) for pitch in (0.0, -alpha1) for yaw in (-alpha0, 0.0, alpha0)]


def sweep_actions(alpha0: float = 30.0, alpha1: float = 60.0,
                  config: ActionConfig = ActionConfig()) -> List[Action]:
    """Discrete actions that reproduce the sweep and return to the starting heading and pitch"""
    turns = int(round(alpha0 / config.turn_deg))
    looks = int(round(alpha1 / config.look_deg))
    rotation = [Action.TURN_RIGHT] * turns + [Action.TURN_LEFT] * (2 * turns) + [Action.TURN_RIGHT] * turns
    return rotation + [Action.LOOK_DOWN] * looks + rotation + [Action.LOOK_UP] * looks


def sweep_capture(scene: SceneSpec, state: RobotState, target_center: Sequence[float],
                  alpha0: float = 30.0, alpha1: float = 60.0,
                  intrinsics: Optional[Intrinsics] = None) -> List[Frame]:
    """
    Six captures around the robot's heading toward the target.

    Raises:
        ValueError: If the robot is not facing the target within 1 degree
    """
    offset = wrap_deg(bearing_deg(state.position, target_center) - state.heading_deg)
    if abs(offset) > 1.0:
        raise ValueError(f"Sweep requires facing the target, heading is off by {offset:.1f} deg")

    frames = []
    for index, (yaw, pitch) in enumerate(sweep_offsets(alpha0, alpha1), start=1):
        pose = camera_pose(state.x, state.y, wrap_deg(state.heading_deg + yaw), pitch, state.camera_height)
        frames.append(capture_frame(scene, pose, intrinsics, index))
    return frames


def exploration_poses(scene: SceneSpec, free_map: OccupancyMap, spacing: float = 1.5,
                      headings: int = 8, pitch_deg: float = -15.0,
                      component: Optional[int] = None) -> List[Tuple[float, float, float, float]]:
    """
    Capture poses on a lattice of free positions, each with `headings` evenly spaced yaws.

    Args:
        scene: Scene whose floor the lattice covers
        free_map: Inflated occupancy map deciding which lattice points are usable
        spacing: Lattice spacing (meters)
        headings: Yaw samples per position
        pitch_deg: Camera pitch for every capture
        component: Optional free-space component the positions must belong to

    Returns:
        List of (x, y, heading_deg, pitch_deg)
    """
    xmin, ymin, xmax, ymax = scene.floor
    components = free_map.free_components() if component is not None else None
    poses = []
    for y in np.arange(ymin + spacing / 2.0, ymax, spacing):
        for x in np.arange(xmin + spacing / 2.0, xmax, spacing):
            if not free_map.is_free((x, y)):
                continue
            if components is not None and components[free_map.world_to_cell((x, y))] != component:
                continue
            for k in range(headings):
                poses.append((float(x), float(y), wrap_deg(k * 360.0 / headings), pitch_deg))
    return poses
