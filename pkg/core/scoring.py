"""
Scoring - task queries, scorer decisions and the scorer-driven stages:
target-scene identification, object localization in a frame, marker
projection and candidate scoring.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from simworld.camera import Frame
from simworld.scene import FLOOR_ID, SceneSpec

from .candidates import CandidateSet
from .errors import NoVisibleCandidates, ObjectNotFound, SegmentNotFound
from .geometry import OBJECT_LABEL, PointCloud

if TYPE_CHECKING:
    from .scorer_interface import ScorerInterface

logger = logging.getLogger(__name__)

STAGES = ("select_image", "select_segment", "score_candidates")


@dataclass(frozen=True)
class TaskQuery:
    text: str
    label: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("Task text must not be empty")
        if not self.label.strip():
            raise ValueError("Task label must not be empty")

    @classmethod
    def resolve(cls, text: str, scene: Optional[SceneSpec] = None) -> "TaskQuery":
        """
        Resolve the object label named in `text`.

        The longest scene label found in the text wins; without a match the
        scene's own task label is used when its text matches, otherwise the
        text itself becomes the label.
        """
        lowered = text.lower()
        if scene is not None:
            labels = sorted({p.label for p in scene.primitives if p.label}, key=len, reverse=True)
            for label in labels:
                if re.search(rf"\b{re.escape(label.lower())}\b", lowered):
                    return cls(text, label)
            if scene.task is not None and scene.task.text.lower() == lowered:
                return cls(text, scene.task.label)
        return cls(text, text.strip())

    def to_dict(self) -> Dict[str, str]:
        return {"text": self.text, "label": self.label}


@dataclass(frozen=True)
class ScorerDecision:
    """Scores over numbered options; `chosen` is the number of the winning option"""

    options: Tuple[int, ...]
    scores: Tuple[float, ...]
    rationale: str = ""

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(int(o) for o in self.options))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.options) != len(self.scores):
            raise ValueError(f"{len(self.scores)} scores for {len(self.options)} options")
        if not self.options:
            raise ValueError("A decision needs at least one option")

    @property
    def chosen_position(self) -> int:
        # np.argmax returns the first maximum
        return int(np.argmax(self.scores))

    @property
    def chosen(self) -> int:
        return self.options[self.chosen_position]

    @property
    def abstained(self) -> bool:
        return all(score == 0.0 for score in self.scores)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "options": list(self.options),
            "scores": list(self.scores),
            "chosen": self.chosen,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScorerDecision":
        return cls(tuple(data["options"]), tuple(data["scores"]), data.get("rationale", ""))


@dataclass(frozen=True)
class MarkerPlacement:
    marker: int
    pixel: Tuple[float, float]
    depth: float
    visible: bool


@dataclass(frozen=True)
class MarkerOverlay:
    """Candidate circles projected into one frame"""

    frame_index: int
    markers: Tuple[MarkerPlacement, ...] = field(default_factory=tuple)

    @property
    def visible(self) -> List[MarkerPlacement]:
        return [m for m in self.markers if m.visible]

    def placement(self, marker: int) -> MarkerPlacement:
        for placement in self.markers:
            if placement.marker == marker:
                return placement
        raise KeyError(f"No marker {marker} in overlay")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame_index": self.frame_index,
            "markers": [
                {"marker": m.marker, "pixel": list(m.pixel), "depth": m.depth, "visible": m.visible}
                for m in self.markers
            ],
        }


@dataclass(frozen=True)
class ScoringContext:
    """What a scorer may know about the episode besides the images"""

    query: TaskQuery
    scene: Optional[SceneSpec] = None
    seed: int = 0


def identify_target_scene(frames: Sequence[Frame], context: ScoringContext,
                          scorer: "ScorerInterface") -> Tuple[int, np.ndarray, ScorerDecision]:
    """
    Pick the frame that best shows the queried object.

    Returns:
        (chosen frame index, chosen camera ground position, decision)

    Raises:
        ValueError: If no frames are given
        ObjectNotFound: If the scorer abstains
    """
    if not frames:
        raise ValueError("Target scene identification needs at least one frame")
    decision = scorer.select_image(context, frames)
    if decision.abstained:
        raise ObjectNotFound(f"'{context.query.label}' is not visible in any of {len(frames)} images")
    frame = next(f for f in frames if f.index == decision.chosen)
    goal = frame.position[:2].copy()
    logger.info(f"Target scene: image {decision.chosen} at ({goal[0]:.2f}, {goal[1]:.2f})")
    return decision.chosen, goal, decision


def locate_object_in_frame(frame: Frame, context: ScoringContext,
                           scorer: "ScorerInterface") -> Tuple[PointCloud, int, ScorerDecision]:
    """
    Back-project the segment the scorer picks for the query.

    Returns:
        (object point cloud labelled as the object, chosen segment id, decision)

    Raises:
        SegmentNotFound: If the frame has no segments or the scorer abstains
    """
    segments = [s for s in frame.segment_ids() if s != FLOOR_ID]
    if not segments:
        raise SegmentNotFound(f"Image {frame.index} has no segments")
    decision = scorer.select_segment(context, frame, segments)
    if decision.abstained:
        raise SegmentNotFound(f"No segment of image {frame.index} matches '{context.query.label}'")
    points = frame.back_project(frame.seg == decision.chosen)
    cloud = PointCloud(points, np.full(len(points), OBJECT_LABEL))
    logger.debug(f"Segment {decision.chosen} of image {frame.index}: {len(cloud)} points")
    return cloud, decision.chosen, decision


def object_views(frames: Sequence[Frame], segment: int) -> Tuple[PointCloud, List[int]]:
    """
    Points of `segment` from every frame that shows it, labelled as the object.
    Segment ids are instance ids shared by all captures of a scene.

    Returns:
        (object point cloud, indices of the frames that contributed)
    """
    clouds, seen = [], []
    for frame in frames:
        mask = frame.seg == segment
        if not mask.any():
            continue
        points = frame.back_project(mask)
        clouds.append(PointCloud(points, np.full(len(points), OBJECT_LABEL)))
        seen.append(frame.index)
    return PointCloud.concatenate(clouds), seen


def project_markers(frame: Frame, candidates: CandidateSet, scene: SceneSpec,
                    ground_height: float = 0.0) -> MarkerOverlay:
    """
    Project candidate centers (lifted to the ground plane) into the frame.

    A marker is visible when it lies in front of the camera, inside the
    image and no primitive blocks the line of sight to it.
    """
    if len(candidates) == 0:
        raise ValueError("No candidates to project")
    centers = candidates.centers
    points = np.column_stack([centers, np.full(len(centers), ground_height)])
    pixels, depth = frame.project(points)
    inside = frame.in_bounds(np.nan_to_num(pixels, nan=-1.0, posinf=-1.0, neginf=-1.0))

    camera = frame.position
    placements = []
    for circle, pixel, z, in_image, point in zip(candidates, pixels, depth, inside, points):
        visible = bool(z > 1e-6 and in_image) and not scene.segment_blocked(camera, point)
        placements.append(MarkerPlacement(circle.marker, (float(pixel[0]), float(pixel[1])),
                                          float(z), visible))
    overlay = MarkerOverlay(frame.index, tuple(placements))
    logger.debug(f"{len(overlay.visible)} of {len(placements)} markers visible in image {frame.index}")
    return overlay


def score_candidates(frame: Frame, overlay: MarkerOverlay, candidates: CandidateSet,
                     context: ScoringContext, scorer: "ScorerInterface") -> ScorerDecision:
    """
    Score the visible markers only.

    Raises:
        NoVisibleCandidates: If no marker is visible
    """
    visible = overlay.visible
    if not visible:
        raise NoVisibleCandidates(f"None of {len(overlay.markers)} candidates is visible in image {frame.index}")
    visible_overlay = MarkerOverlay(overlay.frame_index, tuple(visible))
    decision = scorer.score_candidates(context, frame, visible_overlay, candidates)
    logger.info(f"Candidate {decision.chosen} chosen among markers {list(decision.options)}")
    return decision
