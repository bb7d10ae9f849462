import json
import logging
import threading
from typing import Any, Dict, List, Sequence

from core.candidates import CandidateSet
from core.errors import Malformed
from core.scoring import MarkerOverlay, ScorerDecision, ScoringContext
from simworld.camera import Frame
from .base_scorer import ScorerPlugin

logger = logging.getLogger(__name__)


def decision_record(stage: str, decision: ScorerDecision, seed: int) -> str:
    """One line of a decision log"""
    record = {
        "stage": stage,
        "options": list(decision.options),
        "scores": list(decision.scores),
        "chosen": decision.chosen,
        "rationale": decision.rationale,
        "seed": seed,
    }
    return json.dumps(record, sort_keys=True)


def load_decision_log(path: str) -> List[Dict[str, Any]]:
    """
    Raises:
        FileNotFoundError: If the log does not exist
        Malformed: If a line is not a decision record
    """
    records = []
    with open(path, "r", encoding="utf-8") as file:
        for number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                ScorerDecision(tuple(record["options"]), tuple(record["scores"]))
                record["stage"]
            except (ValueError, KeyError, TypeError) as e:
                raise Malformed(f"{path}:{number}: not a decision record ({e})")
            records.append(record)
    return records


class ScriptedScorer(ScorerPlugin):
    """Replays a decision log in order; every call must match the recorded stage and options"""

    def __init__(self, records: Sequence[Dict[str, Any]], source: str = "<memory>"):
        self.records = list(records)
        self.source = source
        self.position = 0
        self._lock = threading.Lock()

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "ScriptedScorer":
        path = config.get("path")
        if not path:
            raise ValueError("The scripted scorer needs a decision log 'path'")
        return cls(load_decision_log(path), path)

    @property
    def name(self) -> str:
        return "Scripted Scorer"

    @property
    def description(self) -> str:
        return f"Replays {len(self.records)} recorded decisions from {self.source}"

    @property
    def serialized(self) -> bool:
        return True

    def _next(self, stage: str, options: Sequence[int]) -> ScorerDecision:
        with self._lock:
            if self.position >= len(self.records):
                raise Malformed(f"Decision log {self.source} exhausted after {self.position} decisions")
            record = self.records[self.position]
            self.position += 1
        if record["stage"] != stage or list(record["options"]) != list(options):
            raise Malformed(
                f"Decision {self.position} of {self.source} is {record['stage']} over {record['options']}, "
                f"asked for {stage} over {list(options)}"
            )
        return ScorerDecision(tuple(record["options"]), tuple(record["scores"]), record.get("rationale", ""))

    def select_image(self, context: ScoringContext, frames: Sequence[Frame]) -> ScorerDecision:
        return self._next("select_image", [frame.index for frame in frames])

    def select_segment(self, context: ScoringContext, frame: Frame,
                       segment_ids: Sequence[int]) -> ScorerDecision:
        return self._next("select_segment", segment_ids)

    def score_candidates(self, context: ScoringContext, frame: Frame, overlay: MarkerOverlay,
                         candidates: CandidateSet) -> ScorerDecision:
        return self._next("score_candidates", [placement.marker for placement in overlay.markers])
