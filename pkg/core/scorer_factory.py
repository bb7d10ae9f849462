"""
Scorer Factory - a module responsible for creating the scorer an episode
consults, from configuration or a command-line scorer spec.
"""

import logging
from typing import Any, Dict

from .scorer_interface import ScorerInterface

logger = logging.getLogger(__name__)


class ScorerFactory:
    """Scorer factory supporting the registered scorer kinds."""

    @staticmethod
    def parse_spec(spec: str) -> Dict[str, Any]:
        """
        Turn a command-line scorer spec into a configuration section.

        `oracle`, `scripted:<log path>`, `remote:<url>` and
        `recording:<log path>` (recording the oracle) are accepted.
        """
        kind, _, argument = spec.partition(":")
        kind = kind.strip().lower()
        if kind == "oracle":
            return {"kind": "oracle"}
        if kind == "scripted":
            return {"kind": "scripted", "path": argument}
        if kind == "remote":
            return {"kind": "remote", "endpoint": argument}
        if kind == "recording":
            return {"kind": "recording", "path": argument, "inner": {"kind": "oracle"}}
        return {"kind": kind}

    @staticmethod
    def create_scorer(config: Dict[str, Any]) -> ScorerInterface:
        """
        Create a scorer based on configuration.

        Args:
            config: Scorer configuration with a `kind` key

        Returns:
            Scorer instance

        Raises:
            ValueError: If the kind is not supported or its settings are incomplete
        """
        from scorers import SCORER_REGISTRY

        kind = str(config.get("kind", "oracle")).lower()
        scorer_class = SCORER_REGISTRY.get(kind)
        if scorer_class is None:
            raise ValueError(
                f"Unsupported scorer kind: {kind}. Supported kinds are: {', '.join(SCORER_REGISTRY)}"
            )
        scorer = scorer_class.create_from_config(config)
        logger.info(f"Scorer: {scorer.name}")
        return scorer
