"""
Simulated world - scene primitives, raycast camera, occupancy map, disc robot
and the scene templates used for benchmark suites.
"""

from .scene import FLOOR_ID, Pose2D, Primitive, SceneSpec, TaskSpec, optimal_operation_pose
from .camera import Frame, Intrinsics, capture_frame, scene_image_set
from .occupancy import OccupancyMap, build_occupancy_map, ground_truth_task_grid
from .robot import Action, ActionConfig, RobotState, apply_action, sweep_capture
from .templates import SUITES, TEMPLATE_REGISTRY, build_suite, generate_scene

__all__ = [
    "FLOOR_ID",
    "Pose2D",
    "Primitive",
    "SceneSpec",
    "TaskSpec",
    "optimal_operation_pose",
    "Frame",
    "Intrinsics",
    "capture_frame",
    "scene_image_set",
    "OccupancyMap",
    "build_occupancy_map",
    "ground_truth_task_grid",
    "Action",
    "ActionConfig",
    "RobotState",
    "apply_action",
    "sweep_capture",
    "SUITES",
    "TEMPLATE_REGISTRY",
    "build_suite",
    "generate_scene",
]
