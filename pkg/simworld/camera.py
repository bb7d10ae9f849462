"""
Camera - pinhole intrinsics, raycast depth + segmentation capture and
pixel/world conversions.

Camera frame: x right, y down, z forward. Depth is the z coordinate in
the camera frame; seg holds the object id of the first hit (0 = nothing).
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.geometry import OBJECT_LABEL, OTHER_LABEL, PointCloud, RigidTransform
from .scene import SceneSpec

DEFAULT_IMAGE_SIZE = (160, 120)
DEFAULT_HFOV_DEG = 90.0
CAMERA_HEIGHT = 1.5


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @classmethod
    def from_fov(cls, width: int = DEFAULT_IMAGE_SIZE[0], height: int = DEFAULT_IMAGE_SIZE[1],
                 hfov_deg: float = DEFAULT_HFOV_DEG) -> "Intrinsics":
        focal = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(focal, focal, width / 2.0, height / 2.0, width, height)

    def pixel_rays(self) -> np.ndarray:
        """Camera-frame ray per pixel center with z = 1, shape (H*W, 3), row-major"""
        v, u = np.indices((self.height, self.width), dtype=float)
        x = (u + 0.5 - self.cx) / self.fx
        y = (v + 0.5 - self.cy) / self.fy
        return np.stack([x.ravel(), y.ravel(), np.ones(x.size)], axis=1)


def camera_rotation(heading_deg: float, pitch_deg: float) -> np.ndarray:
    """Columns are the camera x/y/z axes in world coordinates"""
    heading = math.radians(heading_deg)
    pitch = math.radians(pitch_deg)
    forward = np.array([
        math.cos(pitch) * math.cos(heading),
        math.cos(pitch) * math.sin(heading),
        math.sin(pitch),
    ])
    right = np.array([math.sin(heading), -math.cos(heading), 0.0])
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def camera_pose(x: float, y: float, heading_deg: float, pitch_deg: float = 0.0,
                height: float = CAMERA_HEIGHT) -> RigidTransform:
    """Camera-to-world transform for a camera at (x, y, height)"""
    return RigidTransform(camera_rotation(heading_deg, pitch_deg), (x, y, height))


@dataclass(frozen=True)
class Frame:
    depth: np.ndarray
    seg: np.ndarray
    pose: RigidTransform
    intrinsics: Intrinsics
    index: int = 0

    @property
    def position(self) -> np.ndarray:
        return np.asarray(self.pose.translation)

    def segment_ids(self) -> List[int]:
        return [int(v) for v in np.unique(self.seg) if v != 0]

    def pixel_count(self, object_ids: Iterable[int]) -> int:
        return int(np.count_nonzero(np.isin(self.seg, list(object_ids))))

    def back_project(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """World points of the hit pixels selected by `mask` (default: all hits)"""
        hits = self.depth > 0
        if mask is not None:
            hits &= mask
        v, u = np.nonzero(hits)
        z = self.depth[v, u]
        k = self.intrinsics
        camera_points = np.column_stack([
            (u + 0.5 - k.cx) / k.fx * z,
            (v + 0.5 - k.cy) / k.fy * z,
            z,
        ])
        return self.pose.apply(camera_points)

    def point_cloud(self, object_ids: Sequence[int] = ()) -> PointCloud:
        """All hit pixels; pixels of `object_ids` are labelled as the object"""
        hits = self.depth > 0
        points = self.back_project(hits)
        is_object = np.isin(self.seg[hits], list(object_ids))
        labels = np.where(is_object, OBJECT_LABEL, OTHER_LABEL)
        return PointCloud(points, labels)

    def project(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """
        Pinhole projection of world points.

        Returns:
            (pixels as (u, v) floats, camera-frame depth z)
        """
        camera_points = self.pose.inverse().apply(points)
        z = camera_points[:, 2]
        k = self.intrinsics
        with np.errstate(divide="ignore", invalid="ignore"):
            u = k.fx * camera_points[:, 0] / z + k.cx
            v = k.fy * camera_points[:, 1] / z + k.cy
        return np.column_stack([u, v]), z

    def in_bounds(self, pixels: np.ndarray) -> np.ndarray:
        k = self.intrinsics
        return ((pixels[:, 0] >= 0) & (pixels[:, 0] < k.width)
                & (pixels[:, 1] >= 0) & (pixels[:, 1] < k.height))


def capture_frame(scene: SceneSpec, pose: RigidTransform, intrinsics: Optional[Intrinsics] = None,
                  index: int = 0) -> Frame:
    """Raycast one depth + segmentation image from `pose`"""
    intrinsics = intrinsics or Intrinsics.from_fov()
    directions = intrinsics.pixel_rays() @ pose.rotation.T
    t, ids = scene.raycast(pose.translation, directions)
    hit = np.isfinite(t)
    shape = (intrinsics.height, intrinsics.width)
    depth = np.where(hit, t, 0.0).reshape(shape)
    seg = np.where(hit, ids, 0).astype(np.int32).reshape(shape)
    return Frame(depth, seg, pose, intrinsics, index)


def scene_image_set(scene: SceneSpec, capture_poses: Sequence[Tuple[float, float, float, float]],
                    intrinsics: Optional[Intrinsics] = None,
                    camera_height: float = CAMERA_HEIGHT) -> List[Frame]:
    """Capture at each (x, y, heading_deg, pitch_deg); frames are numbered from 1"""
    return [
        capture_frame(scene, camera_pose(x, y, heading, pitch, camera_height), intrinsics, index)
        for index, (x, y, heading, pitch) in enumerate(capture_poses, start=1)
    ]
