import logging
import os
from typing import Any, Dict, Optional, Sequence

from core.candidates import CandidateSet
from core.scoring import MarkerOverlay, ScorerDecision, ScoringContext
from core.wire_format import (RemoteOption, RemoteScoreRequest, encode_image, highlight_segment,
                              segmentation_image, stamp_marker)
from rest_client import ScorerAPIClient
from simworld.camera import Frame
from .base_scorer import ScorerPlugin

logger = logging.getLogger(__name__)


class RemoteScorer(ScorerPlugin):
    """
    Sends every decision to an HTTP scoring service.

    Args:
        client: Client bound to the scoring endpoint
        behavior: Optional `behavior` query parameter forwarded to the service
    """

    def __init__(self, client: ScorerAPIClient, behavior: Optional[str] = None):
        self.client = client
        self.behavior = behavior

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "RemoteScorer":
        endpoint = os.getenv("ORIENTNAV_SCORER_URL") or config.get("endpoint")
        if not endpoint:
            raise ValueError("The remote scorer needs an 'endpoint' (or ORIENTNAV_SCORER_URL)")
        client = ScorerAPIClient(
            endpoint,
            timeout=float(config.get("timeout", 30.0)),
            retries=int(config.get("retries", 2)),
            api_key=os.getenv("ORIENTNAV_SCORER_API_KEY") or config.get("api_key"),
        )
        return cls(client, config.get("behavior"))

    @property
    def name(self) -> str:
        return "Remote Scorer"

    @property
    def description(self) -> str:
        return f"HTTP scoring service at {self.client.endpoint}"

    def _send(self, request: RemoteScoreRequest) -> ScorerDecision:
        params = {"behavior": self.behavior} if self.behavior else None
        response = self.client.score(request, params=params)
        options = tuple(option.number for option in request.options)
        return ScorerDecision(options, tuple(response.scores), response.rationale or "")

    def select_image(self, context: ScoringContext, frames: Sequence[Frame]) -> ScorerDecision:
        options = [RemoteOption(index=frame.index, image=encode_image(segmentation_image(frame)))
                   for frame in frames]
        return self._send(RemoteScoreRequest(task=context.query.text, stage="select_image", options=options))

    def select_segment(self, context: ScoringContext, frame: Frame,
                       segment_ids: Sequence[int]) -> ScorerDecision:
        # Unmarked image as context next to one marked image per segment
        options = [RemoteOption(index=int(s), image=encode_image(highlight_segment(frame, s)))
                   for s in segment_ids]
        request = RemoteScoreRequest(task=context.query.text, stage="select_segment", options=options,
                                     context_image=encode_image(segmentation_image(frame)))
        return self._send(request)

    def score_candidates(self, context: ScoringContext, frame: Frame, overlay: MarkerOverlay,
                         candidates: CandidateSet) -> ScorerDecision:
        base = segmentation_image(frame)
        options = [
            RemoteOption(marker=placement.marker,
                         image=encode_image(stamp_marker(base, placement.marker, placement.pixel)))
            for placement in overlay.markers
        ]
        request = RemoteScoreRequest(task=context.query.text, stage="score_candidates", options=options,
                                     context_image=encode_image(base))
        return self._send(request)
