"""
Scene - synthetic world specification: floor, box/cylinder primitives,
per-object operation directions and the robot start pose.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import NoOperationDirection

FLOOR_ID = 1
SHAPES = ("box", "cylinder")


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    heading_deg: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_dict(self) -> Dict[str, float]:
        return {"x": self.x, "y": self.y, "heading_deg": self.heading_deg}


@dataclass(frozen=True)
class Primitive:
    """Vertical prism resting on the floor; yaw in degrees, size = (sx, sy, height)"""

    object_id: int
    center: Tuple[float, float]
    size: Tuple[float, float, float]
    shape: str = "box"
    yaw_deg: float = 0.0
    label: Optional[str] = None
    operation_direction: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"Unsupported primitive shape: {self.shape}. Supported shapes are: {SHAPES}")
        if min(self.size) <= 0:
            raise ValueError(f"Primitive {self.object_id} must have positive size")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        if self.operation_direction is not None:
            direction = np.asarray(self.operation_direction, dtype=float)
            norm = np.linalg.norm(direction)
            if norm < 1e-12:
                raise ValueError(f"Primitive {self.object_id} has a zero operation direction")
            object.__setattr__(self, "operation_direction", tuple(float(v) for v in direction / norm))

    @property
    def radius(self) -> float:
        return self.size[0] / 2.0

    @property
    def height(self) -> float:
        return self.size[2]

    def _rotation(self) -> np.ndarray:
        yaw = math.radians(self.yaw_deg)
        c, s = math.cos(yaw), math.sin(yaw)
        return np.array([[c, -s], [s, c]])

    def to_local(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return (points - self.center) @ self._rotation()

    def footprint_distance(self, points) -> np.ndarray:
        """Distance from 2D points to the footprint (0 inside)"""
        local = self.to_local(points)
        if self.shape == "cylinder":
            return np.maximum(np.hypot(local[:, 0], local[:, 1]) - self.radius, 0.0)
        half = np.array(self.size[:2]) / 2.0
        excess = np.maximum(np.abs(local) - half, 0.0)
        return np.hypot(excess[:, 0], excess[:, 1])

    def footprint_contains(self, points, pad: float = 0.0) -> np.ndarray:
        local = self.to_local(points)
        if self.shape == "cylinder":
            return np.hypot(local[:, 0], local[:, 1]) < self.radius + pad
        half = np.array(self.size[:2]) / 2.0 + pad
        return np.all(np.abs(local) < half, axis=1)

    def boundary_along(self, direction) -> np.ndarray:
        """Footprint boundary point on the ray from the center along `direction`"""
        direction = np.asarray(direction, dtype=float)
        if self.shape == "cylinder":
            return np.asarray(self.center) + direction * self.radius
        local = direction @ self._rotation()
        half = np.array(self.size[:2]) / 2.0
        with np.errstate(divide="ignore"):
            scales = np.where(np.abs(local) > 1e-12, half / np.abs(local), np.inf)
        return np.asarray(self.center) + direction * float(scales.min())

    def ray_hits(self, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Ray parameter t of the first hit (inf on miss) for rays origin + t * direction"""
        yaw = math.radians(self.yaw_deg)
        c, s = math.cos(yaw), math.sin(yaw)
        rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        o = rotation.T @ (origin - np.array([self.center[0], self.center[1], 0.0]))
        d = directions @ rotation

        if self.shape == "cylinder":
            return _cylinder_hits(o, d, self.radius, self.height)
        half = np.array(self.size[:2]) / 2.0
        low = np.array([-half[0], -half[1], 0.0])
        high = np.array([half[0], half[1], self.height])
        return _box_hits(o, d, low, high)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "object_id": self.object_id,
            "shape": self.shape,
            "center": list(self.center),
            "size": list(self.size),
            "yaw_deg": self.yaw_deg,
            "label": self.label,
        }
        if self.operation_direction is not None:
            data["operation_direction"] = list(self.operation_direction)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Primitive":
        direction = data.get("operation_direction")
        return cls(
            object_id=int(data["object_id"]),
            center=tuple(data["center"]),
            size=tuple(data["size"]),
            shape=data.get("shape", "box"),
            yaw_deg=float(data.get("yaw_deg", 0.0)),
            label=data.get("label"),
            operation_direction=tuple(direction) if direction is not None else None,
        )


def _box_hits(o: np.ndarray, d: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (low - o) / d
        t2 = (high - o) / d
    parallel = d == 0
    inside = (o >= low) & (o <= high)
    t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    t_near = t_lo.max(axis=1)
    t_far = t_hi.min(axis=1)
    hit = (t_near <= t_far) & (t_near > 1e-9)
    return np.where(hit, t_near, np.inf)


def _cylinder_hits(o: np.ndarray, d: np.ndarray, radius: float, height: float) -> np.ndarray:
    t_best = np.full(len(d), np.inf)

    a = d[:, 0] ** 2 + d[:, 1] ** 2
    b = 2.0 * (o[0] * d[:, 0] + o[1] * d[:, 1])
    c = o[0] ** 2 + o[1] ** 2 - radius ** 2
    disc = b * b - 4.0 * a * c
    with np.errstate(divide="ignore", invalid="ignore"):
        t_side = (-b - np.sqrt(disc)) / (2.0 * a)
    z = o[2] + t_side * d[:, 2]
    side_ok = (a > 0) & (disc >= 0) & (t_side > 1e-9) & (z >= 0.0) & (z <= height)
    t_best = np.where(side_ok, t_side, t_best)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_cap = (height - o[2]) / d[:, 2]
    cap_x = o[0] + t_cap * d[:, 0]
    cap_y = o[1] + t_cap * d[:, 1]
    cap_ok = (d[:, 2] != 0) & (t_cap > 1e-9) & (cap_x ** 2 + cap_y ** 2 <= radius ** 2)
    return np.where(cap_ok & (t_cap < t_best), t_cap, t_best)


@dataclass(frozen=True)
class TaskSpec:
    text: str
    label: str


@dataclass(frozen=True)
class SceneSpec:
    """Ground-truth world; the floor (id 1) spans `floor` = (xmin, ymin, xmax, ymax) at z = 0"""

    name: str
    floor: Tuple[float, float, float, float]
    primitives: Tuple[Primitive, ...]
    start: Pose2D
    task: Optional[TaskSpec] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        ids = [p.object_id for p in self.primitives]
        if len(set(ids)) != len(ids) or FLOOR_ID in ids:
            raise ValueError(f"Scene {self.name}: object ids must be unique and differ from floor id {FLOOR_ID}")

    def primitive(self, object_id: int) -> Primitive:
        for primitive in self.primitives:
            if primitive.object_id == object_id:
                return primitive
        raise KeyError(f"Scene {self.name} has no object {object_id}")

    def objects_with_label(self, label: str) -> List[Primitive]:
        return sorted((p for p in self.primitives if p.label == label), key=lambda p: p.object_id)

    def label_of(self, object_id: int) -> Optional[str]:
        if object_id == FLOOR_ID:
            return "floor"
        try:
            return self.primitive(object_id).label
        except KeyError:
            return None

    def raycast(self, origin, directions) -> Tuple[np.ndarray, np.ndarray]:
        """
        First hit of each ray against floor and primitives.

        Returns:
            (t, object_id) arrays; t = inf and id 0 where nothing is hit
        """
        origin = np.asarray(origin, dtype=float).reshape(3)
        directions = np.asarray(directions, dtype=float).reshape(-1, 3)
        t_best = np.full(len(directions), np.inf)
        ids = np.zeros(len(directions), dtype=np.int32)

        with np.errstate(divide="ignore", invalid="ignore"):
            t_floor = -origin[2] / directions[:, 2]
        hit_x = origin[0] + t_floor * directions[:, 0]
        hit_y = origin[1] + t_floor * directions[:, 1]
        xmin, ymin, xmax, ymax = self.floor
        on_floor = ((directions[:, 2] < 0) & (t_floor > 1e-9)
                    & (hit_x >= xmin) & (hit_x <= xmax) & (hit_y >= ymin) & (hit_y <= ymax))
        t_best = np.where(on_floor, t_floor, t_best)
        ids = np.where(on_floor, FLOOR_ID, ids)

        for primitive in self.primitives:
            t = primitive.ray_hits(origin, directions)
            closer = t < t_best
            t_best = np.where(closer, t, t_best)
            ids = np.where(closer, primitive.object_id, ids)
        return t_best, ids

    def segment_blocked(self, start, end, ignore_ids: Sequence[int] = ()) -> bool:
        """True if a primitive (not the floor) cuts the open segment start -> end"""
        start = np.asarray(start, dtype=float).reshape(3)
        direction = (np.asarray(end, dtype=float).reshape(3) - start).reshape(1, 3)
        for primitive in self.primitives:
            if primitive.object_id in ignore_ids:
                continue
            t = primitive.ray_hits(start, direction)[0]
            if 1e-6 < t < 1.0 - 1e-6:
                return True
        return False

    def clearance(self, position, ignore_ids: Sequence[int] = ()) -> float:
        """Distance from a 2D position to the nearest primitive footprint or floor edge"""
        position = np.asarray(position, dtype=float).reshape(1, 2)
        xmin, ymin, xmax, ymax = self.floor
        x, y = position[0]
        distance = min(x - xmin, xmax - x, y - ymin, ymax - y)
        for primitive in self.primitives:
            if primitive.object_id not in ignore_ids:
                distance = min(distance, float(primitive.footprint_distance(position)[0]))
        return distance

    def collides(self, position, radius: float) -> bool:
        return self.clearance(position) < radius

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "floor": list(self.floor),
            "primitives": [p.to_dict() for p in self.primitives],
            "start": self.start.to_dict(),
            "metadata": self.metadata,
        }
        if self.task is not None:
            data["task"] = {"text": self.task.text, "label": self.task.label}
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneSpec":
        task = data.get("task")
        return cls(
            name=data.get("name", "scene"),
            floor=tuple(float(v) for v in data["floor"]),
            primitives=tuple(Primitive.from_dict(p) for p in data.get("primitives", [])),
            start=Pose2D(**data["start"]),
            task=TaskSpec(**task) if task else None,
            metadata=dict(data.get("metadata", {})),
        )

    @classmethod
    def load(cls, path: str) -> "SceneSpec":
        with open(path, "r", encoding="utf-8") as file:
            return cls.from_dict(json.load(file))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as file:
            file.write(self.to_json() + "\n")


def bearing_deg(origin, target) -> float:
    delta = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    return math.degrees(math.atan2(delta[1], delta[0]))


def optimal_operation_pose(scene: SceneSpec, object_id: int, r_r: float = 0.2,
                           clearance: float = 0.01) -> Pose2D:
    """
    Ground-truth pose from which the object is operated.

    Raises:
        NoOperationDirection: If the object declares no operation direction
    """
    primitive = scene.primitive(object_id)
    if primitive.operation_direction is None:
        raise NoOperationDirection(f"Object {object_id} ({primitive.label}) has no operation direction")
    direction = np.asarray(primitive.operation_direction)
    position = primitive.boundary_along(direction) + direction * (r_r + clearance)
    return Pose2D(float(position[0]), float(position[1]), bearing_deg(position, primitive.center))
