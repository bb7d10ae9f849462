import logging
from typing import Any, Dict, Sequence

import numpy as np

from core.candidates import CandidateSet
from core.scoring import MarkerOverlay, ScorerDecision, ScoringContext
from simworld.camera import Frame
from simworld.scene import Primitive, SceneSpec
from .base_scorer import ScorerPlugin

logger = logging.getLogger(__name__)

BLOCKED_PENALTY = 10.0
LINE_OF_SIGHT_HEIGHT = 0.25
FRONT_OFFSET = 0.01


def _require_scene(context: ScoringContext) -> SceneSpec:
    if context.scene is None:
        raise ValueError("The oracle scorer needs the scene in its scoring context")
    return context.scene


def target_primitive(scene: SceneSpec, label: str) -> Primitive:
    """The scene's declared target when it carries the label, else the lowest id with it"""
    target_id = scene.metadata.get("target_id")
    if target_id is not None and scene.label_of(target_id) == label:
        return scene.primitive(target_id)
    matches = scene.objects_with_label(label)
    if not matches:
        raise ValueError(f"No object labelled '{label}' in scene {scene.name}")
    return matches[0]


class OracleScorer(ScorerPlugin):
    """Decides from simulator ground truth"""

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "OracleScorer":
        return cls()

    @property
    def name(self) -> str:
        return "Oracle Scorer"

    @property
    def description(self) -> str:
        return "Ground-truth pixel counts, label matches and operation-direction alignment"

    def select_image(self, context: ScoringContext, frames: Sequence[Frame]) -> ScorerDecision:
        scene = _require_scene(context)
        ids = [p.object_id for p in scene.objects_with_label(context.query.label)]
        counts = [frame.pixel_count(ids) if ids else 0 for frame in frames]

        # First the images that contain the object, then the clearest of them
        containing = [frame.index for frame, count in zip(frames, counts) if count > 0]
        scores = [count / float(frame.depth.size) for frame, count in zip(frames, counts)]
        if containing:
            clearest = frames[int(np.argmax(counts))].index
            rationale = f"contains: {containing}; clearest: {clearest}"
        else:
            rationale = "contains: []"
        return ScorerDecision(tuple(frame.index for frame in frames), tuple(scores), rationale)

    def select_segment(self, context: ScoringContext, frame: Frame,
                       segment_ids: Sequence[int]) -> ScorerDecision:
        scene = _require_scene(context)
        scores = [1.0 if scene.label_of(s) == context.query.label else 0.0 for s in segment_ids]
        return ScorerDecision(tuple(segment_ids), tuple(scores), f"label match for '{context.query.label}'")

    def score_candidates(self, context: ScoringContext, frame: Frame, overlay: MarkerOverlay,
                         candidates: CandidateSet) -> ScorerDecision:
        scene = _require_scene(context)
        target = target_primitive(scene, context.query.label)
        center = np.asarray(target.center, dtype=float)

        markers = [placement.marker for placement in overlay.markers]
        scores = []
        for marker in markers:
            position = np.asarray(candidates.by_marker(marker).center, dtype=float)
            scores.append(self._alignment(scene, target, center, position))
        return ScorerDecision(tuple(markers), tuple(scores), "operation-direction alignment")

    @staticmethod
    def _alignment(scene: SceneSpec, target: Primitive, center: np.ndarray, position: np.ndarray) -> float:
        to_object = center - position
        distance = float(np.linalg.norm(to_object))
        if target.operation_direction is None:
            return 1.0 / (1.0 + distance)
        if distance == 0.0:
            return -1.0
        direction = np.asarray(target.operation_direction, dtype=float)
        score = float(np.dot(to_object / distance, -direction))

        front = target.boundary_along(direction) + direction * FRONT_OFFSET
        start = (position[0], position[1], LINE_OF_SIGHT_HEIGHT)
        end = (front[0], front[1], LINE_OF_SIGHT_HEIGHT)
        if scene.segment_blocked(start, end, ignore_ids=(target.object_id,)):
            score -= BLOCKED_PENALTY
        return score
