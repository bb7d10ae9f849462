"""
Geometry - point clouds, rigid transforms, RANSAC ground-plane extraction
and projection onto the ground frame.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import DegenerateCloud

logger = logging.getLogger(__name__)

OBJECT_LABEL = "object"
OTHER_LABEL = "other"

WORLD_UP = np.array([0.0, 0.0, 1.0])


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PointCloud:
    """3D points in the world frame with an optional per-point class tag"""

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ValueError("Point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _frozen(points))

        if self.labels is not None:
            labels = np.array(self.labels, dtype=str).reshape(-1)
            if len(labels) != len(points):
                raise ValueError(
                    f"Labels length {len(labels)} does not match points length {len(points)}"
                )
            object.__setattr__(self, "labels", _frozen(labels))

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)))

    @classmethod
    def concatenate(cls, clouds: Iterable["PointCloud"]) -> "PointCloud":
        """Stack clouds; labels survive only if every part carries them"""
        clouds = [c for c in clouds if len(c)]
        if not clouds:
            return cls.empty()
        points = np.vstack([c.points for c in clouds])
        if all(c.labels is not None for c in clouds):
            return cls(points, np.concatenate([c.labels for c in clouds]))
        return cls(points)

    def select(self, label: str) -> "PointCloud":
        if self.labels is None:
            return PointCloud.empty()
        mask = self.labels == label
        return PointCloud(self.points[mask], self.labels[mask])

    def subset(self, mask: np.ndarray) -> "PointCloud":
        labels = None if self.labels is None else self.labels[mask]
        return PointCloud(self.points[mask], labels)


@dataclass(frozen=True)
class RigidTransform:
    """Rotation followed by translation: x' = R x + t"""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        translation = np.array(self.translation, dtype=float).reshape(3)
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=1e-6) or np.linalg.det(rotation) <= 0:
            raise ValueError("Rotation matrix is not a proper rotation")
        object.__setattr__(self, "rotation", _frozen(rotation))
        object.__setattr__(self, "translation", _frozen(translation))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_translation(cls, translation: Sequence[float]) -> "RigidTransform":
        return cls(np.eye(3), translation)

    @classmethod
    def about_z(cls, angle: float, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        """Rotation by `angle` radians about world-up, then translation"""
        c, s = math.cos(angle), math.sin(angle)
        rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(rotation, translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return points @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform that applies `other` first, then self"""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rotation_t = self.rotation.T
        return RigidTransform(rotation_t, -rotation_t @ self.translation)


@dataclass(frozen=True)
class PlaneModel:
    """Plane n . x + d = 0 with its RANSAC inliers"""

    normal: np.ndarray
    d: float
    inlier_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        normal = np.array(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            raise ValueError("Plane normal must be non-zero")
        object.__setattr__(self, "normal", _frozen(normal / norm))
        object.__setattr__(self, "d", float(self.d) / norm)
        object.__setattr__(self, "inlier_indices", _frozen(np.array(self.inlier_indices, dtype=int)))

    @property
    def inlier_count(self) -> int:
        return len(self.inlier_indices)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float).reshape(-1, 3) @ self.normal + self.d

    def distance_to_points(self, points: np.ndarray) -> np.ndarray:
        return np.abs(self.signed_distance(points))

    @property
    def equation_string(self) -> str:
        n = self.normal
        return f"{n[0]:.4f}x + {n[1]:.4f}y + {n[2]:.4f}z + {self.d:.4f} = 0"


@dataclass(frozen=True)
class GroundFrame:
    """Fixed 2D frame on a plane: origin is the plane foot of the world origin"""

    origin: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    normal: np.ndarray

    @classmethod
    def from_plane(cls, plane: PlaneModel) -> "GroundFrame":
        normal = plane.normal
        origin = -plane.d * normal
        reference = np.array([1.0, 0.0, 0.0])
        if abs(reference @ normal) > 0.9:
            reference = np.array([0.0, 1.0, 0.0])
        axis_u = reference - (reference @ normal) * normal
        axis_u /= np.linalg.norm(axis_u)
        axis_v = np.cross(normal, axis_u)
        return cls(origin, axis_u, axis_v, normal)

    def to_2d(self, points: np.ndarray) -> np.ndarray:
        offsets = np.asarray(points, dtype=float).reshape(-1, 3) - self.origin
        return np.column_stack([offsets @ self.axis_u, offsets @ self.axis_v])

    def to_3d(self, points_2d: np.ndarray) -> np.ndarray:
        """Lift 2D ground coordinates back onto the plane"""
        points_2d = np.asarray(points_2d, dtype=float).reshape(-1, 2)
        return self.origin + np.outer(points_2d[:, 0], self.axis_u) + np.outer(points_2d[:, 1], self.axis_v)

    def height(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float).reshape(-1, 3) - self.origin) @ self.normal


def _plane_through(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray):
    normal = np.cross(p2 - p1, p3 - p1)
    norm = np.linalg.norm(normal)
    if norm < 1e-10:
        raise DegenerateCloud("Points are collinear")
    normal = normal / norm
    return normal, -float(normal @ p1)


def _least_squares_plane(points: np.ndarray):
    centroid = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - centroid, full_matrices=False)
    normal = vt[-1]
    return normal, -float(normal @ centroid)


def fit_ground_plane(cloud: PointCloud, iterations: int = 500, inlier_tol: float = 0.01,
                     seed: int = 0, max_tilt_deg: Optional[float] = None) -> PlaneModel:
    """
    Fit the dominant plane with RANSAC and refine it by least squares on its inliers.

    Args:
        cloud: Scene point cloud
        iterations: Number of random 3-point hypotheses
        inlier_tol: Maximum point-plane distance for an inlier (meters)
        seed: Random seed; identical (cloud, seed) gives an identical plane
        max_tilt_deg: Optional bound on the angle between the normal and world-up

    Returns:
        PlaneModel with the normal pointing up and the final inlier indices

    Raises:
        DegenerateCloud: If fewer than 3 points or no usable hypothesis exists
    """
    xyz = cloud.points
    n_points = len(xyz)
    if n_points < 3:
        raise DegenerateCloud(f"Need at least 3 points, got {n_points}")

    rng = np.random.default_rng(seed)
    min_up = math.cos(math.radians(max_tilt_deg)) if max_tilt_deg is not None else None

    best = None
    best_count = 0
    for _ in range(iterations):
        sample = rng.choice(n_points, 3, replace=False)
        try:
            normal, d = _plane_through(*xyz[sample])
        except DegenerateCloud:
            continue

        if normal @ WORLD_UP < 0:
            normal, d = -normal, -d
        if min_up is not None and normal @ WORLD_UP < min_up:
            continue

        count = int(np.count_nonzero(np.abs(xyz @ normal + d) <= inlier_tol))
        if count > best_count:
            best, best_count = (normal, d), count

    if best is None:
        raise DegenerateCloud("All plane hypotheses were collinear or rejected")

    normal, d = best
    mask = np.abs(xyz @ normal + d) <= inlier_tol
    if best_count >= 3:
        refit_normal, refit_d = _least_squares_plane(xyz[mask])
        if refit_normal @ WORLD_UP < 0:
            refit_normal, refit_d = -refit_normal, -refit_d
        refit_mask = np.abs(xyz @ refit_normal + refit_d) <= inlier_tol
        tilt_ok = min_up is None or refit_normal @ WORLD_UP >= min_up
        if tilt_ok and np.count_nonzero(refit_mask) >= best_count:
            normal, d, mask = refit_normal, refit_d, refit_mask

    plane = PlaneModel(normal, d, np.flatnonzero(mask))
    logger.debug(f"Ground plane {plane.equation_string} with {plane.inlier_count}/{n_points} inliers")
    return plane


def project_to_ground(cloud: PointCloud, plane: PlaneModel) -> np.ndarray:
    """Orthogonal projection of every point into the plane's 2D ground frame, order preserved"""
    if not len(cloud):
        return np.zeros((0, 2))
    return GroundFrame.from_plane(plane).to_2d(cloud.points)


def transform_cloud(cloud: PointCloud, pose: RigidTransform) -> PointCloud:
    return PointCloud(pose.apply(cloud.points), cloud.labels)


def save_xyz(cloud: PointCloud, path: str) -> None:
    """Write one `x y z [label]` line per point"""
    with open(path, "w", encoding="utf-8") as file:
        for i, point in enumerate(cloud.points):
            line = f"{point[0]:.9f} {point[1]:.9f} {point[2]:.9f}"
            if cloud.labels is not None:
                line += f" {cloud.labels[i]}"
            file.write(line + "\n")


def load_xyz(path: str) -> PointCloud:
    points: List[List[float]] = []
    labels: List[str] = []
    with open(path, "r", encoding="utf-8") as file:
        for line in file:
            parts = line.split()
            if not parts:
                continue
            points.append([float(v) for v in parts[:3]])
            if len(parts) > 3:
                labels.append(parts[3])
    if labels and len(labels) != len(points):
        raise ValueError(f"{path}: labels present on only some lines")
    return PointCloud(np.array(points).reshape(-1, 3), labels or None)
