from abc import abstractmethod
from typing import Any, Dict

from core.scorer_interface import ScorerInterface


class ScorerPlugin(ScorerInterface):
    """Abstract base class for scorers that can be built from configuration"""

    @classmethod
    @abstractmethod
    def from_config(cls, config: Dict[str, Any]) -> "ScorerPlugin":
        """
        Build the scorer from its configuration section.

        Args:
            config: Scorer configuration (the `scorer` section of config.yaml)

        Returns:
            Scorer instance
        """

    @classmethod
    def create_from_config(cls, config: Dict[str, Any]) -> "ScorerPlugin":
        return cls.from_config(dict(config))
