"""
Common interface for all scorer implementations
"""

from abc import ABC, abstractmethod
from typing import Sequence

from simworld.camera import Frame

from .candidates import CandidateSet
from .scoring import MarkerOverlay, ScorerDecision, ScoringContext


class ScorerInterface(ABC):
    """Abstract base class for the component that stands in for a vision-language model"""

    @abstractmethod
    def select_image(self, context: ScoringContext, frames: Sequence[Frame]) -> ScorerDecision:
        """
        Score each frame for how well it shows the queried object

        Args:
            context: Query and episode information
            frames: Candidate images, options are their indices

        Returns:
            Decision over frame indices; all-zero scores mean the object was not found
        """

    @abstractmethod
    def select_segment(self, context: ScoringContext, frame: Frame,
                       segment_ids: Sequence[int]) -> ScorerDecision:
        """
        Pick the segment of `frame` that is the queried object

        Args:
            context: Query and episode information
            frame: Image whose segments are the options
            segment_ids: Segment ids, ascending

        Returns:
            Decision over segment ids; all-zero scores mean no segment matches
        """

    @abstractmethod
    def score_candidates(self, context: ScoringContext, frame: Frame, overlay: MarkerOverlay,
                         candidates: CandidateSet) -> ScorerDecision:
        """
        Score the visible candidate markers for operating the object

        Args:
            context: Query and episode information
            frame: Image the markers were projected into
            overlay: Visible markers only
            candidates: Full candidate set the markers refer to

        Returns:
            Decision over marker numbers
        """

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the display name of this scorer"""

    @property
    @abstractmethod
    def description(self) -> str:
        """Return a description of how this scorer decides"""

    @property
    def serialized(self) -> bool:
        """True if calls must not overlap; the benchmark then runs episodes one at a time"""
        return False
