import logging
import os
import threading
from typing import Any, Dict, Sequence

from core.candidates import CandidateSet
from core.scorer_interface import ScorerInterface
from core.scoring import MarkerOverlay, ScorerDecision, ScoringContext
from simworld.camera import Frame
from .base_scorer import ScorerPlugin
from .scripted_scorer import decision_record

logger = logging.getLogger(__name__)


class RecordingScorer(ScorerPlugin):
    """Delegates to another scorer and appends each decision to a JSON-lines log"""

    def __init__(self, inner: ScorerInterface, path: str):
        self.inner = inner
        self.path = path
        self._lock = threading.Lock()
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "RecordingScorer":
        from core.scorer_factory import ScorerFactory

        path = config.get("path")
        if not path:
            raise ValueError("The recording scorer needs a log 'path'")
        inner = ScorerFactory.create_scorer(config.get("inner", {"kind": "oracle"}))
        return cls(inner, path)

    @property
    def name(self) -> str:
        return f"Recording {self.inner.name}"

    @property
    def description(self) -> str:
        return f"{self.inner.description}; decisions logged to {self.path}"

    @property
    def serialized(self) -> bool:
        # The log order must follow the episode order
        return True

    def _record(self, stage: str, decision: ScorerDecision, seed: int) -> ScorerDecision:
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as file:
                file.write(decision_record(stage, decision, seed) + "\n")
        return decision

    def select_image(self, context: ScoringContext, frames: Sequence[Frame]) -> ScorerDecision:
        return self._record("select_image", self.inner.select_image(context, frames), context.seed)

    def select_segment(self, context: ScoringContext, frame: Frame,
                       segment_ids: Sequence[int]) -> ScorerDecision:
        decision = self.inner.select_segment(context, frame, segment_ids)
        return self._record("select_segment", decision, context.seed)

    def score_candidates(self, context: ScoringContext, frame: Frame, overlay: MarkerOverlay,
                         candidates: CandidateSet) -> ScorerDecision:
        decision = self.inner.score_candidates(context, frame, overlay, candidates)
        return self._record("score_candidates", decision, context.seed)
